use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::driver::{solve, SolverConfig, Status};
use crate::problems::{initial_point, make_problem, InitialPointSpec, Problem, CHANDRASEKHAR_DIM_CAP};

/// Dimensions of the full experiment grid.
pub const FULL_DIMS: [usize; 5] = [1000, 5000, 10_000, 50_000, 100_000];

/// A named solver configuration taking part in a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSolver {
    pub name: String,
    #[serde(default)]
    pub config: SolverConfig,
}

impl NamedSolver {
    pub fn hybrid_plus() -> Self {
        Self { name: "hybrid+".into(), config: SolverConfig::default() }
    }
}

/// Skips matching grid cells. `dim = None` matches every dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusion {
    pub problem: u32,
    pub x0: u32,
    #[serde(default)]
    pub dim: Option<usize>,
}

/// Caps the dimension at which a problem is run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimCap {
    pub problem: u32,
    pub max_dim: usize,
}

/// Experiment grid: every (problem, dim, x0) cell is run once per solver,
/// minus exclusions and dimension caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSpec {
    pub problems: Vec<u32>,
    pub dims: Vec<usize>,
    pub x0_ids: Vec<u32>,
    /// Seed of the random starting point (x0 id 10).
    pub seed: u64,
    pub solvers: Vec<NamedSolver>,
    /// Per-run wall-clock budget in seconds; overrides solver settings.
    pub time_limit: Option<f64>,
    pub exclusions: Vec<Exclusion>,
    pub dim_caps: Vec<DimCap>,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self::desk()
    }
}

impl SuiteSpec {
    /// Desk-scale grid: all ten problems, n in {1000, 5000}, deterministic
    /// starting points 1..=9.
    pub fn desk() -> Self {
        Self {
            problems: (1..=10).collect(),
            dims: vec![1000, 5000],
            x0_ids: (1..=9).collect(),
            seed: 0,
            solvers: vec![NamedSolver::hybrid_plus()],
            time_limit: None,
            // No x0^9 rows exist for problem 8 in the reference tables.
            exclusions: vec![Exclusion { problem: 8, x0: 9, dim: None }],
            dim_caps: vec![DimCap { problem: 7, max_dim: CHANDRASEKHAR_DIM_CAP }],
            jobs: None,
        }
    }

    /// The full grid: five dimensions up to 100000 and all ten starting
    /// points, with the O(n^2) H-equation capped.
    pub fn full() -> Self {
        Self { dims: FULL_DIMS.to_vec(), x0_ids: (1..=10).collect(), ..Self::desk() }
    }

    /// Switches an existing spec to the full dimension and starting-point grid.
    pub fn into_full(mut self) -> Self {
        let full = Self::full();
        self.dims = full.dims;
        self.x0_ids = full.x0_ids;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.solvers.is_empty() {
            return Err(BenchError::InvalidSpec("no solvers given".into()));
        }
        if self.problems.is_empty() || self.dims.is_empty() || self.x0_ids.is_empty() {
            return Err(BenchError::InvalidSpec("problems, dims and x0_ids must be nonempty".into()));
        }
        let mut names = BTreeSet::new();
        for s in &self.solvers {
            if !names.insert(s.name.as_str()) {
                return Err(BenchError::InvalidSpec(format!("duplicate solver name `{}`", s.name)));
            }
            s.config.validate()?;
        }
        for &id in &self.problems {
            for &n in &self.dims {
                make_problem(id, n)?;
            }
        }
        for &x0 in &self.x0_ids {
            if !(1..=10).contains(&x0) {
                return Err(crate::problems::ProblemError::UnknownInitialPoint(x0).into());
            }
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(BenchError::InvalidSpec(format!("time_limit must be positive, got {t}")));
            }
        }
        if self.jobs == Some(0) {
            return Err(BenchError::InvalidSpec("jobs must be at least 1".into()));
        }
        Ok(())
    }

    fn excluded(&self, problem: u32, dim: usize, x0: u32) -> bool {
        self.exclusions
            .iter()
            .any(|e| e.problem == problem && e.x0 == x0 && e.dim.is_none_or(|d| d == dim))
            || self.dim_caps.iter().any(|c| c.problem == problem && dim > c.max_dim)
    }

    /// Grid cells `(problem, dim, x0)` in sorted order.
    pub fn instances(&self) -> Vec<Instance> {
        let problems: BTreeSet<_> = self.problems.iter().copied().collect();
        let dims: BTreeSet<_> = self.dims.iter().copied().collect();
        let x0s: BTreeSet<_> = self.x0_ids.iter().copied().collect();
        let mut out = Vec::new();
        for &problem in &problems {
            for &dim in &dims {
                for &x0 in &x0s {
                    if !self.excluded(problem, dim, x0) {
                        out.push(Instance { problem, dim, x0 });
                    }
                }
            }
        }
        out
    }
}

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Instance {
    pub problem: u32,
    pub dim: usize,
    pub x0: u32,
}

/// Outcome of one solver on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub solver: String,
    pub problem: u32,
    pub dim: usize,
    pub x0: u32,
    pub status: Status,
    pub iters: usize,
    pub fevals: usize,
    pub time_s: f64,
    pub fnorm: f64,
}

impl ResultRow {
    pub fn instance(&self) -> Instance {
        Instance { problem: self.problem, dim: self.dim, x0: self.x0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    /// Solver names in order of first appearance.
    pub fn solvers(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for r in &self.rows {
            if !seen.contains(&r.solver) {
                seen.push(r.solver.clone());
            }
        }
        seen
    }

    pub fn instances(&self) -> BTreeSet<Instance> {
        self.rows.iter().map(ResultRow::instance).collect()
    }

    pub fn get(&self, solver: &str, inst: Instance) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.solver == solver && r.instance() == inst)
    }
}

/// Runs every grid cell for every solver on a worker pool.
///
/// Rows come back in (solver order, problem, dim, x0) order regardless of
/// completion order. Per-run failures are recorded in the row status.
pub fn run_suite(spec: &SuiteSpec) -> Result<ResultsTable, BenchError> {
    spec.validate()?;
    let instances = spec.instances();
    let tasks: Vec<(usize, Instance)> = (0..spec.solvers.len())
        .flat_map(|s| instances.iter().map(move |&i| (s, i)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = spec.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| BenchError::InvalidSpec(format!("thread pool: {e}")))?;

    let mut rows: Vec<(usize, ResultRow)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, inst)| run_one(spec, s, inst).map(|row| (s, row)))
            .collect::<Result<_, BenchError>>()
    })?;
    rows.sort_by_key(|(s, r)| (*s, r.instance()));
    Ok(ResultsTable { rows: rows.into_iter().map(|(_, r)| r).collect() })
}

fn run_one(spec: &SuiteSpec, solver: usize, inst: Instance) -> Result<ResultRow, BenchError> {
    let named = &spec.solvers[solver];
    let mut cfg = named.config.clone();
    cfg.trace = false;
    if spec.time_limit.is_some() {
        cfg.time_limit = spec.time_limit;
    }
    let problem = Problem::new(inst.problem, inst.dim)?;
    let x0 = initial_point(InitialPointSpec::new(inst.x0, inst.dim).with_seed(spec.seed))?;
    let report = solve(&problem, &x0, &cfg)?;
    Ok(ResultRow {
        solver: named.name.clone(),
        problem: inst.problem,
        dim: inst.dim,
        x0: inst.x0,
        status: report.status,
        iters: report.iterations,
        fevals: report.fevals,
        time_s: report.wall_time,
        fnorm: report.final_residual_norm,
    })
}
