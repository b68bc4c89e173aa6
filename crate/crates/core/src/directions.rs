//! Search directions: a clamped per-coordinate spectral scaling of the
//! residual plus a nonnegative HS/PRP hybrid conjugate term.
//!
//! For `k >= 1` the direction is
//!
//! ```text
//! d_k = -diag(1/b_k) F(x_k) + beta_k d_{k-1}
//! b_k^i  = clamp(y_{k-1}^i / s_{k-1}^i, l, u)    (1 when s_{k-1}^i == 0)
//! beta_k = max(0, <F_k, y_{k-1}>) / max(<d_{k-1}, y_{k-1}>, |F_{k-1}|^2)
//! ```
//!
//! and `d_0 = -F(x_0)`.

use crate::linalg::dot;

/// Diagonal Jacobian surrogate `diag(b)` with every entry in `[ell, u]`.
///
/// The search direction uses its inverse, so applying the scaling divides
/// componentwise by `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling {
    b: Vec<f64>,
    ell: f64,
    u: f64,
}

impl DiagonalScaling {
    /// Identity scaling (`b = 1`), as used at the first iterate.
    pub fn identity(n: usize, ell: f64, u: f64) -> Self {
        Self { b: vec![1.0; n], ell, u }
    }

    pub fn quotients(&self) -> &[f64] {
        &self.b
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.ell, self.u)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `(min b, max b)`, or `None` for an empty scaling.
    pub fn range(&self) -> Option<(f64, f64)> {
        if self.b.is_empty() {
            return None;
        }
        Some(self.b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        }))
    }

    /// Returns `v_i / b_i`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.b.len());
        v.iter().zip(&self.b).map(|(vi, bi)| vi / bi).collect()
    }
}

/// Builds the clamped spectral quotients from the last step `s` and residual
/// change `y`.
///
/// The zero test on `s_i` is exact equality; a subnormal `s_i` takes the
/// quotient branch and is tamed by the clamp (an infinite quotient lands on
/// `u` or `ell`).
pub fn spectral_diagonal(s_prev: &[f64], y_prev: &[f64], ell: f64, u: f64) -> DiagonalScaling {
    assert_eq!(s_prev.len(), y_prev.len(), "s and y must have equal length");
    debug_assert!(0.0 < ell && ell < 1.0 && 1.0 <= u);
    let b = s_prev
        .iter()
        .zip(y_prev)
        .map(|(&s, &y)| {
            if s == 0.0 {
                1.0
            } else {
                let q = y / s;
                if q.is_nan() {
                    // Only reachable with a non-finite y; treat as "no curvature info".
                    1.0
                } else {
                    q.min(u).max(ell)
                }
            }
        })
        .collect();
    DiagonalScaling { b, ell, u }
}

/// Previous-iterate quantities needed for `k >= 1`.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub f_prev: &'a [f64],
    pub d_prev: &'a [f64],
    /// `x_k - x_{k-1}`.
    pub s_prev: &'a [f64],
    /// `F(x_k) - F(x_{k-1})`.
    pub y_prev: &'a [f64],
}

/// Everything the direction at iterate `k` depends on.
#[derive(Debug, Clone, Copy)]
pub struct DirectionContext<'a> {
    pub k: usize,
    pub f_curr: &'a [f64],
    pub history: Option<History<'a>>,
}

impl<'a> DirectionContext<'a> {
    /// Context for the first iterate.
    pub fn initial(f_curr: &'a [f64]) -> Self {
        Self { k: 0, f_curr, history: None }
    }

    pub fn new(
        k: usize,
        f_curr: &'a [f64],
        f_prev: &'a [f64],
        d_prev: &'a [f64],
        s_prev: &'a [f64],
        y_prev: &'a [f64],
    ) -> Self {
        Self { k, f_curr, history: Some(History { f_prev, d_prev, s_prev, y_prev }) }
    }

    /// Checks that `y_prev == f_curr - f_prev` bitwise.
    pub fn is_consistent(&self) -> bool {
        match self.history {
            None => true,
            Some(h) => {
                let n = self.f_curr.len();
                [h.f_prev.len(), h.d_prev.len(), h.s_prev.len(), h.y_prev.len()]
                    .iter()
                    .all(|&l| l == n)
                    && self
                        .f_curr
                        .iter()
                        .zip(h.f_prev)
                        .zip(h.y_prev)
                        .all(|((fc, fp), y)| (fc - fp).to_bits() == y.to_bits())
            }
        }
    }
}

/// The nonnegative hybrid conjugate parameter. Zero at `k = 0`.
///
/// The denominator is at least `|F_{k-1}|^2`, which is positive because the
/// solver stops as soon as a residual vanishes.
pub fn hybrid_beta(ctx: &DirectionContext<'_>) -> f64 {
    let Some(h) = ctx.history else {
        return 0.0;
    };
    let num = dot(ctx.f_curr, h.y_prev).max(0.0);
    let den = dot(h.d_prev, h.y_prev).max(dot(h.f_prev, h.f_prev));
    num / den
}

/// Direction at iterate `k`. See [`search_direction_with_beta`].
pub fn search_direction(ctx: &DirectionContext<'_>, scaling: &DiagonalScaling) -> Vec<f64> {
    search_direction_with_beta(ctx, scaling).0
}

/// Direction at iterate `k` together with the conjugate parameter used.
///
/// At `k = 0` (or without history) this is exactly `-F(x_0)` and the scaling
/// is ignored.
pub fn search_direction_with_beta(
    ctx: &DirectionContext<'_>,
    scaling: &DiagonalScaling,
) -> (Vec<f64>, f64) {
    match ctx.history {
        Some(h) if ctx.k > 0 => {
            let beta = hybrid_beta(ctx);
            assert_eq!(scaling.len(), ctx.f_curr.len());
            let d = ctx
                .f_curr
                .iter()
                .zip(&scaling.b)
                .zip(h.d_prev)
                .map(|((f, b), dp)| -(f / b) + beta * dp)
                .collect();
            (d, beta)
        }
        _ => (ctx.f_curr.iter().map(|f| -f).collect(), 0.0),
    }
}
