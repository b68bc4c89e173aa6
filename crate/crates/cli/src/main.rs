use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use spectral_hybrid::bench::{emit_curves, emit_table, load_suite_spec, load_table, performance_profile, run_suite, Metric, SuiteSpec};
use spectral_hybrid::{initial_point, solve, InitialPointSpec, Problem, SolveReport, SolverConfig};

#[derive(Parser)]
#[command(name = "spectral-hybrid", version, about = "Derivative-free spectral HS+/PRP+ solver for nonlinear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one benchmark problem and print the report as JSON.
    Solve {
        /// Problem id (1-10) or short name.
        #[arg(long)]
        problem: String,
        #[arg(long)]
        dim: usize,
        /// Initial point id (1-10).
        #[arg(long)]
        x0: u32,
        /// Seed for the random initial point (id 10).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the per-iteration trace.
        #[arg(long)]
        trace: bool,
        /// TOML file with solver parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an experiment grid and write the results table (CSV, or JSON by extension).
    Bench {
        /// TOML suite spec; the desk-scale grid is used when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Use the full grid (n up to 100000, all ten initial points).
        #[arg(long)]
        full: bool,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compute performance profiles from a results table.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        /// iters, fevals or time.
        #[arg(long, default_value = "iters")]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    problem: u32,
    name: &'a str,
    dim: usize,
    x0: u32,
    seed: u64,
    config: &'a SolverConfig,
    #[serde(flatten)]
    report: &'a SolveReport,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve { problem, dim, x0, seed, trace, config } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    SolverConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => SolverConfig::default(),
            };
            cfg.trace |= trace;
            let p = Problem::from_name(&problem, dim)?;
            let x = initial_point(InitialPointSpec::new(x0, dim).with_seed(seed))?;
            let report = solve(&p, &x, &cfg)?;
            let out = SolveOutput { problem: p.id(), name: p.name(), dim, x0, seed, config: &cfg, report: &report };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Bench { spec, out, full, jobs } => {
            let mut suite = match spec {
                Some(path) => load_suite_spec(&path)?,
                None => SuiteSpec::desk(),
            };
            if full {
                suite = suite.into_full();
            }
            if jobs.is_some() {
                suite.jobs = jobs;
            }
            let n_runs = suite.instances().len() * suite.solvers.len();
            eprintln!("running {n_runs} solves (seed {})", suite.seed);
            let table = run_suite(&suite)?;
            emit_table(&table, &out)?;
            let solved = table.rows.iter().filter(|r| r.status.is_success()).count();
            eprintln!("{solved}/{} converged; wrote {}", table.rows.len(), out.display());
        }
        Command::Profile { input, metric, out } => {
            let metric: Metric = metric.parse()?;
            let table = load_table(&input)?;
            let curves = performance_profile(&table, metric)?;
            emit_curves(&curves, &out)?;
            for c in &curves.curves {
                eprintln!("{}: rho(1) = {:.3}, plateau = {:.3}", c.solver, c.value_at(1.0), c.plateau());
            }
        }
    }
    Ok(())
}
