//! Dolan–Moré performance profiles.
//!
//! For instance `p` and solver `s` with cost `t_{p,s}`, the performance ratio
//! is `r_{p,s} = t_{p,s} / min_s t_{p,s}` (`+inf` on failure) and the profile
//! is `rho_s(tau) = #{p : r_{p,s} <= tau} / n_p`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::suite::{Instance, ResultRow, ResultsTable};
use super::BenchError;

/// Floor applied to wall times before taking ratios.
pub const MIN_TIME: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Iterations,
    Fevals,
    WallTime,
}

impl Metric {
    /// Cost of a converged row, floored so ratios stay finite. Failed rows
    /// have no cost.
    pub fn cost(self, row: &ResultRow) -> Option<f64> {
        if !row.status.is_success() {
            return None;
        }
        let v = match self {
            Metric::Iterations => (row.iters as f64).max(1.0),
            Metric::Fevals => (row.fevals as f64).max(1.0),
            Metric::WallTime => row.time_s.max(MIN_TIME),
        };
        v.is_finite().then_some(v)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Iterations => "iters",
            Metric::Fevals => "fevals",
            Metric::WallTime => "time",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iters" | "iter" | "iterations" => Ok(Metric::Iterations),
            "fevals" | "fval" | "nfev" => Ok(Metric::Fevals),
            "time" | "time_s" | "wall_time" => Ok(Metric::WallTime),
            _ => Err(BenchError::UnknownMetric(s.to_string())),
        }
    }
}

/// One solver's profile as a right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub solver: String,
    /// `(tau, rho)` breakpoints, `tau` strictly increasing from 1.
    pub points: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// `rho(tau)`; zero below the first breakpoint.
    pub fn value_at(&self, tau: f64) -> f64 {
        self.points.iter().take_while(|(t, _)| *t <= tau).last().map_or(0.0, |p| p.1)
    }

    /// Value at the largest breakpoint, i.e. the fraction of instances solved.
    pub fn plateau(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurves {
    pub metric: Metric,
    pub n_instances: usize,
    /// Largest breakpoint; every finite ratio is at most this.
    pub tau_max: f64,
    pub curves: Vec<ProfileCurve>,
}

impl ProfileCurves {
    pub fn curve(&self, solver: &str) -> Option<&ProfileCurve> {
        self.curves.iter().find(|c| c.solver == solver)
    }
}

/// Performance ratios `r[s][p]` over the table's instances (sorted) and
/// solvers (first-appearance order). A missing row counts as a failure.
pub fn performance_ratios(table: &ResultsTable, metric: Metric) -> (Vec<String>, Vec<Instance>, Vec<Vec<f64>>) {
    let solvers = table.solvers();
    let instances: Vec<Instance> = table.instances().into_iter().collect();
    let costs: Vec<Vec<Option<f64>>> = solvers
        .iter()
        .map(|s| instances.iter().map(|&p| table.get(s, p).and_then(|r| metric.cost(r))).collect())
        .collect();
    let best: Vec<Option<f64>> = (0..instances.len())
        .map(|p| costs.iter().filter_map(|c| c[p]).reduce(f64::min))
        .collect();
    let ratios = costs
        .iter()
        .map(|c| {
            c.iter()
                .zip(&best)
                .map(|(t, b)| match (t, b) {
                    (Some(t), Some(b)) => t / b,
                    _ => f64::INFINITY,
                })
                .collect()
        })
        .collect();
    (solvers, instances, ratios)
}

/// Builds each solver's profile for `metric`.
///
/// All curves share the same breakpoints: `1` and every distinct finite
/// ratio. At the last breakpoint each curve equals its solver's success
/// fraction.
pub fn performance_profile(table: &ResultsTable, metric: Metric) -> Result<ProfileCurves, BenchError> {
    if table.rows.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    let (solvers, instances, ratios) = performance_ratios(table, metric);
    let n_p = instances.len();

    let mut taus: Vec<f64> = ratios.iter().flatten().copied().filter(|r| r.is_finite()).collect();
    taus.push(1.0);
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let curves = solvers
        .into_iter()
        .zip(&ratios)
        .map(|(solver, r)| {
            let mut sorted: Vec<f64> = r.clone();
            sorted.sort_by(f64::total_cmp);
            let mut idx = 0;
            let points = taus
                .iter()
                .map(|&tau| {
                    while idx < sorted.len() && sorted[idx] <= tau {
                        idx += 1;
                    }
                    (tau, idx as f64 / n_p as f64)
                })
                .collect();
            ProfileCurve { solver, points }
        })
        .collect();

    Ok(ProfileCurves { metric, n_instances: n_p, tau_max: *taus.last().unwrap_or(&1.0), curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::Status;

    fn row(solver: &str, problem: u32, iters: usize, status: Status) -> ResultRow {
        ResultRow {
            solver: solver.into(),
            problem,
            dim: 10,
            x0: 1,
            status,
            iters,
            fevals: iters + 1,
            time_s: 0.01 * iters as f64,
            fnorm: 1e-7,
        }
    }

    #[test]
    fn single_solver_is_always_one() {
        let table = ResultsTable {
            rows: (1..=4).map(|p| row("A", p, 3 * p as usize, Status::Converged)).collect(),
        };
        let prof = performance_profile(&table, Metric::Iterations).unwrap();
        assert_eq!(prof.curves[0].points, vec![(1.0, 1.0)]);
        for tau in [1.0, 2.0, 1e6] {
            assert_eq!(prof.curves[0].value_at(tau), 1.0);
        }
        assert_eq!(prof.curves[0].value_at(0.5), 0.0);
    }

    #[test]
    fn two_solvers_one_instance() {
        let table = ResultsTable { rows: vec![row("A", 1, 5, Status::Converged), row("B", 1, 10, Status::Converged)] };
        let prof = performance_profile(&table, Metric::Iterations).unwrap();
        let a = prof.curve("A").unwrap();
        let b = prof.curve("B").unwrap();
        assert_eq!(a.value_at(1.0), 1.0);
        assert_eq!(b.value_at(1.0), 0.0);
        assert_eq!(b.value_at(2.0), 1.0);
        assert_eq!(b.value_at(1.999), 0.0);
        assert_eq!(prof.tau_max, 2.0);
    }

    #[test]
    fn failure_caps_plateau() {
        let mut rows: Vec<_> = (1..=3).map(|p| row("A", p, 4, Status::Converged)).collect();
        rows.push(row("A", 4, 1000, Status::MaxIterations));
        let prof = performance_profile(&ResultsTable { rows }, Metric::Fevals).unwrap();
        assert_eq!(prof.curves[0].plateau(), 0.75);
        assert_eq!(prof.curves[0].value_at(f64::MAX), 0.75);
    }

    #[test]
    fn zero_iteration_rows_are_floored() {
        let table = ResultsTable { rows: vec![row("A", 1, 0, Status::Converged), row("B", 1, 2, Status::Converged)] };
        let (_, _, r) = performance_ratios(&table, Metric::Iterations);
        assert_eq!(r, vec![vec![1.0], vec![2.0]]);
    }

    #[test]
    fn all_fail_instance_counts_against_everyone() {
        let table = ResultsTable {
            rows: vec![
                row("A", 1, 3, Status::Converged),
                row("B", 1, 3, Status::Converged),
                row("A", 2, 3, Status::LineSearchStall),
                row("B", 2, 3, Status::MaxIterations),
            ],
        };
        let prof = performance_profile(&table, Metric::Iterations).unwrap();
        for c in &prof.curves {
            assert_eq!(c.plateau(), 0.5);
        }
    }

    #[test]
    fn missing_row_is_a_failure() {
        let table = ResultsTable {
            rows: vec![row("A", 1, 3, Status::Converged), row("A", 2, 3, Status::Converged), row("B", 1, 6, Status::Converged)],
        };
        let prof = performance_profile(&table, Metric::Iterations).unwrap();
        assert_eq!(prof.curve("B").unwrap().plateau(), 0.5);
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("iters".parse::<Metric>().unwrap(), Metric::Iterations);
        assert_eq!("fevals".parse::<Metric>().unwrap(), Metric::Fevals);
        assert_eq!("time".parse::<Metric>().unwrap(), Metric::WallTime);
        assert!(matches!("flops".parse::<Metric>(), Err(BenchError::UnknownMetric(_))));
        assert!(matches!(performance_profile(&ResultsTable::default(), Metric::Fevals), Err(BenchError::EmptyTable)));
    }
}
