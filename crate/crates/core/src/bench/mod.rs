//! Benchmark harness: grid runs, performance profiles, and result files.

mod io;
mod profile;
mod suite;

use std::path::PathBuf;

use thiserror::Error;

pub use io::*;
pub use profile::{performance_profile, performance_ratios, Metric, ProfileCurve, ProfileCurves, MIN_TIME};
pub use suite::{
    run_suite, DimCap, Exclusion, Instance, NamedSolver, ResultRow, ResultsTable, SuiteSpec, FULL_DIMS,
};

use crate::driver::{ConfigError, SolveError};
use crate::problems::ProblemError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid suite spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("unknown metric `{0}` (expected iters, fevals or time)")]
    UnknownMetric(String),
    #[error("results table is empty")]
    EmptyTable,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
}

/// Reads a TOML suite spec from disk.
pub fn load_suite_spec(path: &std::path::Path) -> Result<SuiteSpec, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io { path: path.to_path_buf(), source: e })?;
    SuiteSpec::from_toml(&text).map_err(|e| BenchError::Toml { path: path.to_path_buf(), source: e })
}
