//! Derivative-free solver for large-scale nonlinear systems `F(x) = 0`.
//!
//! The method combines a per-coordinate (multivariate) spectral scaling of
//! the residual with a nonnegative hybrid of the Hestenes–Stiefel and
//! Polak–Ribière–Polyak conjugate parameters, globalized by a bidirectional
//! nonmonotone line search. No Jacobian is formed or stored.
//!
//! ```
//! use spectral_hybrid::{make_problem, initial_point, solve, InitialPointSpec, SolverConfig, Status};
//!
//! let problem = make_problem(2, 1000).unwrap();
//! let x0 = initial_point(InitialPointSpec::new(1, 1000)).unwrap();
//! let report = solve(&problem, &x0, &SolverConfig::default()).unwrap();
//! assert_eq!(report.status, Status::Converged);
//! assert!(report.final_residual_norm <= 1e-6);
//! ```
//!
//! The [`bench`] module runs experiment grids over the bundled test
//! problems and turns the results into Dolan–Moré performance profiles.

pub mod bench;
pub mod directions;
pub mod driver;
mod linalg;
pub mod linesearch;
pub mod problems;

pub use driver::{check_step_decay, check_trace, solve, ConfigError, InvariantViolation, IterationRecord, SolveError, SolveReport, SolverConfig, Status};
pub use linalg::norm;
pub use problems::{initial_point, make_problem, EvalCost, InitialPointSpec, Problem, ProblemError, System};
