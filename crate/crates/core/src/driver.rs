//! The solver loop.
//!
//! Each iteration: stop if `|F(x_k)| <= tol`, build the direction (negated
//! residual at `k = 0`, spectral hybrid afterwards), run the nonmonotone line
//! search, fold the accepted merit into the memory, repeat. The residual at
//! the accepted trial point is reused, so every residual evaluation after the
//! initial one is a line-search trial.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::directions::{search_direction_with_beta, spectral_diagonal, DiagonalScaling, DirectionContext};
use crate::linalg::{all_finite, norm, sub};
use crate::linesearch::{
    eta_schedule, merit, nonmonotone_search, tau_schedule, update_memory, LineSearchError, LineSearchParams,
    NonmonotoneMemory, ScheduleError, Sign,
};
use crate::problems::System;

/// Parameters of the method. Defaults are the benchmark settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rho: f64,
    pub sigma: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    /// Lower clamp for the spectral quotients.
    pub ell: f64,
    /// Upper clamp for the spectral quotients.
    pub u: f64,
    pub omega_hat: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    /// Wall-clock budget per solve, in seconds.
    pub time_limit: Option<f64>,
    /// Record a per-iteration trace.
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 0.5,
            sigma: 1e-4,
            eta_min: 0.1,
            eta_max: 0.85,
            ell: 1e-10,
            u: 1e10,
            omega_hat: 0.15,
            tol: 1e-6,
            max_iter: 1000,
            max_backtracks: 60,
            time_limit: None,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("rho must lie in (0, 1), got {0}")]
    Rho(f64),
    #[error("sigma must lie in (0, 1), got {0}")]
    Sigma(f64),
    #[error("spectral bounds must satisfy 0 < ell < 1 <= u, got ell={0}, u={1}")]
    SpectralBounds(f64, f64),
    #[error("tol must be positive, got {0}")]
    Tol(f64),
    #[error("time limit must be positive, got {0}")]
    TimeLimit(f64),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(ConfigError::Rho(self.rho));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(ConfigError::Sigma(self.sigma));
        }
        if !(self.ell > 0.0 && self.ell < 1.0 && self.u >= 1.0 && self.u.is_finite()) {
            return Err(ConfigError::SpectralBounds(self.ell, self.u));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError::Tol(self.tol));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(ConfigError::TimeLimit(t));
            }
        }
        eta_schedule(0, self.omega_hat, self.eta_min, self.eta_max)?;
        Ok(())
    }

    /// Parses a (possibly partial) TOML parameter table; missing keys take
    /// their defaults.
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    fn line_search(&self) -> LineSearchParams {
        LineSearchParams { rho: self.rho, sigma: self.sigma, max_backtracks: self.max_backtracks }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchStall,
    NumericalBreakdown,
    TimeLimit,
}

impl Status {
    pub const ALL: [Status; 5] = [
        Status::Converged,
        Status::MaxIterations,
        Status::LineSearchStall,
        Status::NumericalBreakdown,
        Status::TimeLimit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::LineSearchStall => "line_search_stall",
            Status::NumericalBreakdown => "numerical_breakdown",
            Status::TimeLimit => "time_limit",
        }
    }

    pub fn is_success(self) -> bool {
        self == Status::Converged
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Status::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown status `{s}`"))
    }
}

/// One accepted iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `|F(x_k)|`
    pub fnorm: f64,
    /// `f(x_k)`
    pub f: f64,
    pub c: f64,
    pub q: f64,
    pub lambda: f64,
    pub sign: Sign,
    pub beta: f64,
    pub dnorm: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub tau: f64,
    pub eta: f64,
    /// `f(x_{k+1})`
    pub f_next: f64,
    /// `C_k + tau_k - sigma lambda^2 |d_k|^2`
    pub threshold: f64,
    pub c_next: f64,
    pub q_next: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    pub iterations: usize,
    /// Residual evaluations, not counting the one at `x_0`.
    pub fevals: usize,
    /// Seconds.
    pub wall_time: f64,
    pub final_residual_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<IterationRecord>>,
    /// Final iterate.
    #[serde(skip)]
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("initial point has length {got}, system has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid solver configuration: {0}")]
    Config(#[from] ConfigError),
}

/// Solves `F(x) = 0` from `x0`.
///
/// Runtime outcomes (convergence, iteration cap, stalls, overflow) are
/// reported through [`SolveReport::status`]; only invalid inputs are errors.
/// The run is deterministic given `(system, x0, cfg)`, apart from
/// `wall_time` and time-limit cut-offs.
pub fn solve<S: System + ?Sized>(system: &S, x0: &[f64], cfg: &SolverConfig) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    let n = system.dim();
    if x0.len() != n {
        return Err(SolveError::DimensionMismatch { expected: n, got: x0.len() });
    }

    let start = Instant::now();
    let deadline = cfg.time_limit.map(|t| start + Duration::from_secs_f64(t));
    let ls_params = cfg.line_search();
    let mut trace = cfg.trace.then(Vec::new);

    let mut x = x0.to_vec();
    let mut fx = system.eval(&x);
    let mut fevals = 0usize;
    let mut k = 0usize;

    let finish = |status: Status, k: usize, fevals: usize, fx: &[f64], x: Vec<f64>, trace| SolveReport {
        status,
        iterations: k,
        fevals,
        wall_time: start.elapsed().as_secs_f64(),
        final_residual_norm: norm(fx),
        trace,
        x,
    };

    if !all_finite(&x) || !all_finite(&fx) {
        return Ok(finish(Status::NumericalBreakdown, k, fevals, &fx, x, trace));
    }

    let mut mem = NonmonotoneMemory::new(merit(&fx));
    // (x_{k-1}, F(x_{k-1}), d_{k-1}) once k >= 1
    let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;

    let status = loop {
        let fnorm = norm(&fx);
        if fnorm <= cfg.tol {
            break Status::Converged;
        }
        if k >= cfg.max_iter {
            break Status::MaxIterations;
        }
        if deadline.is_some_and(|dl| Instant::now() >= dl) {
            break Status::TimeLimit;
        }

        let (d, beta, scaling) = match &prev {
            None => {
                let scaling = DiagonalScaling::identity(n, cfg.ell, cfg.u);
                let (d, beta) = search_direction_with_beta(&DirectionContext::initial(&fx), &scaling);
                (d, beta, scaling)
            }
            Some((x_prev, f_prev, d_prev)) => {
                let s = sub(&x, x_prev);
                let y = sub(&fx, f_prev);
                let scaling = spectral_diagonal(&s, &y, cfg.ell, cfg.u);
                let ctx = DirectionContext::new(k, &fx, f_prev, d_prev, &s, &y);
                debug_assert!(ctx.is_consistent());
                let (d, beta) = search_direction_with_beta(&ctx, &scaling);
                (d, beta, scaling)
            }
        };
        let dnorm = norm(&d);
        if !dnorm.is_finite() || dnorm == 0.0 {
            break Status::NumericalBreakdown;
        }

        let tau = tau_schedule(k);
        let outcome = match nonmonotone_search(system, &x, &d, &mem, tau, &ls_params) {
            Ok(o) => o,
            Err(LineSearchError::Stall { trials, .. }) => {
                fevals += trials;
                break Status::LineSearchStall;
            }
        };
        fevals += outcome.trials;
        if !all_finite(&outcome.x_next) {
            break Status::NumericalBreakdown;
        }

        let eta = eta_schedule(k, cfg.omega_hat, cfg.eta_min, cfg.eta_max).map_err(ConfigError::from)?;
        let next_mem = update_memory(mem, eta, tau, outcome.f_next);

        if let Some(t) = trace.as_mut() {
            let (b_min, b_max) = scaling.range().unwrap_or((1.0, 1.0));
            t.push(IterationRecord {
                k,
                fnorm,
                f: merit(&fx),
                c: mem.c,
                q: mem.q,
                lambda: outcome.lambda,
                sign: outcome.sign,
                beta,
                dnorm,
                b_min,
                b_max,
                tau,
                eta,
                f_next: outcome.f_next,
                threshold: outcome.threshold,
                c_next: next_mem.c,
                q_next: next_mem.q,
                trials: outcome.trials,
            });
        }

        mem = next_mem;
        let x_prev = std::mem::replace(&mut x, outcome.x_next);
        let f_prev = std::mem::replace(&mut fx, outcome.f_next_vec);
        prev = Some((x_prev, f_prev, d));
        k += 1;
    };

    Ok(finish(status, k, fevals, &fx, x, trace))
}

/// A broken algorithmic inequality found in a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantViolation {
    pub k: usize,
    pub what: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={}: {} ({:e} vs {:e})", self.k, self.what, self.lhs, self.rhs)
    }
}

// Slack for quantities that are exact in real arithmetic but pass through a
// few roundings (C and Q recurrences).
fn le_rounded(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 8.0 * f64::EPSILON * rhs.abs().max(lhs.abs()) + f64::MIN_POSITIVE
}

/// Checks every recorded iteration against the method's guarantees:
/// spectral quotients within `[ell, u]`, nonnegative hybrid parameter,
/// `f(x_k) <= C_k`, `C_{k+1} <= C_k + tau_k`, `Q_k <= 1/(1 - eta_max)`, and
/// the acceptance inequality at every accepted step (checked exactly).
pub fn check_trace(trace: &[IterationRecord], cfg: &SolverConfig) -> Vec<InvariantViolation> {
    let mut out = Vec::new();
    let q_cap = 1.0 / (1.0 - cfg.eta_max);
    let mut push = |k, what, lhs, rhs| out.push(InvariantViolation { k, what, lhs, rhs });

    for r in trace {
        if !(cfg.ell <= r.b_min) {
            push(r.k, "spectral quotient below ell", r.b_min, cfg.ell);
        }
        if !(r.b_max <= cfg.u) {
            push(r.k, "spectral quotient above u", r.b_max, cfg.u);
        }
        if !(r.beta >= 0.0) {
            push(r.k, "negative hybrid parameter", r.beta, 0.0);
        }
        if !le_rounded(r.f, r.c) {
            push(r.k, "f(x_k) > C_k", r.f, r.c);
        }
        if !le_rounded(r.c_next, r.c + r.tau) {
            push(r.k, "C_{k+1} > C_k + tau_k", r.c_next, r.c + r.tau);
        }
        if !le_rounded(r.f_next, r.c_next) {
            push(r.k, "f(x_{k+1}) > C_{k+1}", r.f_next, r.c_next);
        }
        if !le_rounded(r.q, q_cap) || !le_rounded(r.q_next, q_cap) {
            push(r.k, "Q exceeds 1/(1 - eta_max)", r.q.max(r.q_next), q_cap);
        }
        let rhs = r.c + r.tau - cfg.sigma * r.lambda * r.lambda * r.dnorm * r.dnorm;
        // exact: this is the literal acceptance test (up to |d|^2 vs dnorm^2 rounding)
        if !(r.f_next <= r.threshold) || !le_rounded(r.f_next, rhs) {
            push(r.k, "accepted step violates sufficient-decrease condition", r.f_next, r.threshold);
        }
        if !(r.trials >= 1 && r.lambda * r.dnorm > 0.0) {
            push(r.k, "degenerate accepted step", r.lambda * r.dnorm, 0.0);
        }
    }
    out
}

/// Finite-run proxy for `lambda_k |d_k| -> 0`: on a run of at least six
/// iterations the smallest of the last three steps must be shorter than the
/// first one.
pub fn check_step_decay(trace: &[IterationRecord]) -> Option<InvariantViolation> {
    if trace.len() < 6 {
        return None;
    }
    let step = |r: &IterationRecord| r.lambda * r.dnorm;
    let first = step(&trace[0]);
    let tail = trace[trace.len() - 3..].iter().map(step).fold(f64::INFINITY, f64::min);
    (tail >= first).then(|| InvariantViolation { k: trace.len() - 1, what: "step length did not decay", lhs: tail, rhs: first })
}
