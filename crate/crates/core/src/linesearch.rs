//! Derivative-free nonmonotone line search.
//!
//! A trial step `lambda` is accepted when
//!
//! ```text
//! f(x ± lambda d) <= C_k + tau_k - sigma lambda^2 |d|^2
//! ```
//!
//! where `f = |F|^2 / 2`, `C_k` is a weighted running average of past merit
//! values and `tau_k` a summable slack. At each `lambda` the forward point is
//! tried first, then the backward one, before `lambda` shrinks by `rho`.

use thiserror::Error;

use crate::linalg::{axpy, norm_sq};
use crate::problems::System;

/// `|F|^2 / 2`, or `+inf` if any component is non-finite.
pub fn merit(f_x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &v in f_x {
        if !v.is_finite() {
            return f64::INFINITY;
        }
        acc += v * v;
    }
    0.5 * acc
}

/// Summable slack `tau_k = 2^-k`; underflows to zero for large `k`.
pub fn tau_schedule(k: usize) -> f64 {
    // powi takes i32; anything past ~1075 is already zero.
    0.5f64.powi(k.min(2000) as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ScheduleError {
    #[error("omega_hat must lie in (0, 0.18), got {0}")]
    OmegaHat(f64),
    #[error("eta bounds must satisfy 0 < eta_min <= eta_max < 1, got [{0}, {1}]")]
    EtaBounds(f64, f64),
}

/// Memory weight `eta_k = 0.75 exp(min(omega_hat, (k/75)^2)) + 0.1`, clamped
/// into `[eta_min, eta_max]`.
pub fn eta_schedule(k: usize, omega_hat: f64, eta_min: f64, eta_max: f64) -> Result<f64, ScheduleError> {
    if !(omega_hat > 0.0 && omega_hat < 0.18) {
        return Err(ScheduleError::OmegaHat(omega_hat));
    }
    if !(eta_min > 0.0 && eta_min <= eta_max && eta_max < 1.0) {
        return Err(ScheduleError::EtaBounds(eta_min, eta_max));
    }
    let ratio = k as f64 / 75.0;
    let raw = 0.75 * omega_hat.min(ratio * ratio).exp() + 0.1;
    Ok(raw.clamp(eta_min, eta_max))
}

/// Nonmonotone reference value `C` and its weight accumulator `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonmonotoneMemory {
    pub c: f64,
    pub q: f64,
    pub k: usize,
}

impl NonmonotoneMemory {
    /// `C_0 = f(x_0)`, `Q_0 = 1`.
    pub fn new(f0: f64) -> Self {
        Self { c: f0, q: 1.0, k: 0 }
    }
}

/// Advances the memory after accepting a point with merit `f_next`.
pub fn update_memory(mem: NonmonotoneMemory, eta_k: f64, tau_k: f64, f_next: f64) -> NonmonotoneMemory {
    let weighted = eta_k * mem.q;
    let q = weighted + 1.0;
    let c = (weighted * (mem.c + tau_k) + f_next) / q;
    NonmonotoneMemory { c, q, k: mem.k + 1 }
}

/// Which trial point was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    /// `x + lambda d`
    Forward,
    /// `x - lambda d`
    Backward,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Forward => 1.0,
            Sign::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    /// Step contraction factor in `(0, 1)`.
    pub rho: f64,
    /// Sufficient-decrease weight in `(0, 1)`.
    pub sigma: f64,
    /// Number of contractions allowed before giving up.
    pub max_backtracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub lambda: f64,
    pub sign: Sign,
    pub x_next: Vec<f64>,
    pub f_next_vec: Vec<f64>,
    pub f_next: f64,
    /// Residual evaluations performed.
    pub trials: usize,
    /// Right-hand side `C + tau - sigma lambda^2 |d|^2` at acceptance.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("line search stalled after {trials} trials (last step {last_lambda:e})")]
    Stall { trials: usize, last_lambda: f64 },
}

/// Runs the bidirectional backtracking search along `d` from `x`.
///
/// Non-finite trial merits count as a failed test. On success the residual
/// at the accepted point is returned so the caller need not re-evaluate it.
pub fn nonmonotone_search<S: System + ?Sized>(
    system: &S,
    x: &[f64],
    d: &[f64],
    mem: &NonmonotoneMemory,
    tau_k: f64,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome, LineSearchError> {
    let n = x.len();
    debug_assert_eq!(d.len(), n);
    let d_sq = norm_sq(d);
    let slack = mem.c + tau_k;
    let mut lambda = 1.0;
    let mut trials = 0;
    let mut f_trial = vec![0.0; n];

    for m in 0..=params.max_backtracks {
        if m > 0 {
            lambda *= params.rho;
        }
        let threshold = slack - params.sigma * lambda * lambda * d_sq;
        for sign in [Sign::Forward, Sign::Backward] {
            let x_trial = axpy(x, sign.as_f64() * lambda, d);
            system.eval_into(&x_trial, &mut f_trial);
            trials += 1;
            let f = merit(&f_trial);
            // NaN and +inf both fail this comparison.
            if f <= threshold {
                return Ok(LineSearchOutcome {
                    lambda,
                    sign,
                    x_next: x_trial,
                    f_next_vec: f_trial,
                    f_next: f,
                    trials,
                    threshold,
                });
            }
        }
    }
    Err(LineSearchError::Stall { trials, last_lambda: lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Identity;
    impl System for Identity {
        fn dim(&self) -> usize {
            1
        }
        fn eval_into(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0];
        }
    }

    /// `F(x) = x` except that `x > 1.5` overflows.
    struct Cliff;
    impl System for Cliff {
        fn dim(&self) -> usize {
            1
        }
        fn eval_into(&self, x: &[f64], out: &mut [f64]) {
            out[0] = if x[0] > 1.5 { f64::INFINITY } else { x[0] };
        }
    }

    /// Residual whose merit is never below 10.
    struct Floor;
    impl System for Floor {
        fn dim(&self) -> usize {
            1
        }
        fn eval_into(&self, _x: &[f64], out: &mut [f64]) {
            out[0] = 10.0;
        }
    }

    const PARAMS: LineSearchParams = LineSearchParams { rho: 0.5, sigma: 1e-4, max_backtracks: 60 };

    #[test]
    fn merit_examples() {
        assert_eq!(merit(&[0.0; 5]), 0.0);
        assert_eq!(merit(&[3.0, 4.0]), 12.5);
        assert_eq!(merit(&[1.0, f64::INFINITY]), f64::INFINITY);
        assert_eq!(merit(&[f64::NAN]), f64::INFINITY);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_schedule(0), 1.0);
        assert_eq!(tau_schedule(3), 0.125);
        assert_eq!(tau_schedule(2000), 0.0);
        assert_eq!(tau_schedule(usize::MAX), 0.0);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_schedule(0, 0.15, 0.1, 0.85).unwrap(), 0.85);
        let raw = 0.75 * 0.15f64.exp() + 0.1;
        assert!((raw - 0.971_375_682).abs() < 1e-9);
        assert_eq!(eta_schedule(75, 0.15, 0.1, 0.85).unwrap(), 0.85);
        assert_eq!(eta_schedule(0, 1e-300, 0.1, 0.85).unwrap(), 0.85);
        // clamp inactive when bounds are loose
        let v = eta_schedule(75, 0.15, 0.1, 0.99).unwrap();
        assert_eq!(v, raw);
        assert!(eta_schedule(0, 0.18, 0.1, 0.85).is_err());
        assert!(eta_schedule(0, 0.0, 0.1, 0.85).is_err());
        assert!(eta_schedule(0, 0.1, 0.9, 0.85).is_err());
        assert!(eta_schedule(0, 0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn memory_examples() {
        let (f0, f1) = (3.0, 2.0);
        let m = update_memory(NonmonotoneMemory::new(f0), 0.85, 1.0, f1);
        assert_eq!(m.q, 1.85);
        assert_eq!(m.c, (0.85 * (f0 + 1.0) + f1) / 1.85);
        assert_eq!(m.k, 1);

        let m = update_memory(NonmonotoneMemory { c: 7.0, q: 4.0, k: 3 }, 0.0, 0.5, 1.25);
        assert_eq!((m.q, m.c), (1.0, 1.25));

        let m = update_memory(NonmonotoneMemory { c: 2.0, q: 1.85, k: 1 }, 0.85, 0.5, 1.0);
        assert!((m.q - 2.5725).abs() < 1e-14);
        // (0.85 * 1.85 * 2.5 + 1) / 2.5725
        assert!((m.c - 1.916_909_621).abs() < 1e-9, "{}", m.c);
    }

    #[test]
    fn accepts_exact_root_immediately() {
        let x = [1.0];
        let d = [-1.0];
        let mem = NonmonotoneMemory::new(merit(&Identity.eval(&x)));
        let out = nonmonotone_search(&Identity, &x, &d, &mem, 1.0, &PARAMS).unwrap();
        assert_eq!((out.lambda, out.sign, out.trials), (1.0, Sign::Forward, 1));
        assert_eq!(out.x_next, vec![0.0]);
        assert_eq!(out.f_next, 0.0);
    }

    #[test]
    fn ascent_direction_takes_backward_branch() {
        // C = f(1) = 0.5, tau = 1, forward f(2) = 2 > 1.5 - 1e-4
        let x = [1.0];
        let mem = NonmonotoneMemory::new(0.5);
        let out = nonmonotone_search(&Identity, &x, &[1.0], &mem, 1.0, &PARAMS).unwrap();
        assert_eq!((out.lambda, out.sign, out.trials), (1.0, Sign::Backward, 2));
        assert_eq!(out.x_next, vec![0.0]);
        assert_eq!(out.f_next_vec, vec![0.0]);
    }

    #[test]
    fn overflow_trial_falls_through_to_backward() {
        // forward x+d = 2 overflows; backward x-d = 0 succeeds at the same lambda
        let x = [1.0];
        let mem = NonmonotoneMemory::new(0.5);
        let out = nonmonotone_search(&Cliff, &x, &[1.0], &mem, 0.0, &PARAMS).unwrap();
        assert_eq!((out.lambda, out.sign, out.trials), (1.0, Sign::Backward, 2));
    }

    #[test]
    fn shrinks_until_acceptable() {
        // From x = 1 along d = -4 with C = 0.5, tau = 0: lambda=1 -> x=-3 / 5, lambda=0.5 -> -1 / 3,
        // lambda=0.25 -> 0 accepted.
        let mem = NonmonotoneMemory::new(0.5);
        let out = nonmonotone_search(&Identity, &[1.0], &[-4.0], &mem, 0.0, &PARAMS).unwrap();
        assert_eq!((out.lambda, out.sign, out.trials), (0.25, Sign::Forward, 5));
    }

    #[test]
    fn stalls_when_nothing_is_acceptable() {
        let mem = NonmonotoneMemory::new(1.0);
        let params = LineSearchParams { max_backtracks: 5, ..PARAMS };
        let err = nonmonotone_search(&Floor, &[0.0], &[1.0], &mem, 0.0, &params).unwrap_err();
        assert_eq!(err, LineSearchError::Stall { trials: 12, last_lambda: 0.5f64.powi(5) });
    }

    proptest! {
        #[test]
        fn accepted_step_satisfies_condition(
            x0 in -3.0..3.0f64,
            d0 in -5.0..5.0f64,
            c_extra in 0.0..2.0f64,
            k in 0usize..40,
        ) {
            prop_assume!(d0.abs() > 1e-6);
            let f0 = merit(&[x0]);
            let mem = NonmonotoneMemory { c: f0 + c_extra, q: 1.0, k };
            let tau = tau_schedule(k);
            let out = nonmonotone_search(&Identity, &[x0], &[d0], &mem, tau, &PARAMS).unwrap();
            let rhs = mem.c + tau - PARAMS.sigma * out.lambda * out.lambda * d0 * d0;
            prop_assert!(out.f_next <= rhs);
            prop_assert!(out.trials >= 1);
            prop_assert!(out.lambda * d0.abs() > 0.0);
            let m = (out.lambda.log2() / PARAMS.rho.log2()).round();
            prop_assert_eq!(PARAMS.rho.powi(m as i32), out.lambda);
        }

        #[test]
        fn memory_bounds(fs in prop::collection::vec(0.0..10.0f64, 1..200)) {
            // Feed merit values that satisfy the acceptance bound and check the recurrences.
            let mut mem = NonmonotoneMemory::new(fs[0]);
            let eta_max = 0.85;
            for (k, &raw) in fs.iter().enumerate().skip(1) {
                let tau = tau_schedule(k - 1);
                let f_next = raw.min(mem.c + tau);
                let eta = eta_schedule(k - 1, 0.15, 0.1, eta_max).unwrap();
                let next = update_memory(mem, eta, tau, f_next);
                prop_assert!(next.c <= mem.c + tau + 1e-12 * (1.0 + mem.c));
                prop_assert!(f_next <= next.c * (1.0 + 1e-12) + 1e-300);
                prop_assert!(next.q >= 1.0 && next.q <= 1.0 / (1.0 - eta_max));
                mem = next;
            }
        }
    }
}
