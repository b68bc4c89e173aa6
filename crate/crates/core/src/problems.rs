//! Benchmark residual maps and initial points.
//!
//! Ten dimension-parameterized test systems `F: R^n -> R^n` drawn from the
//! large-scale nonlinear-equations literature (La Cruz & Raydan style
//! exponential/logarithmic problems, the Engval gradient, the Chandrasekhar
//! H-equation, and two nonsmooth systems), plus the ten standard starting
//! points used to exercise them.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A square nonlinear system `F(x) = 0`.
///
/// Implementors must be pure: the same `x` always yields a bitwise-identical
/// residual.
pub trait System {
    /// Number of unknowns (and equations).
    fn dim(&self) -> usize;

    /// Writes `F(x)` into `out`. Both slices have length [`System::dim`].
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    /// Allocating convenience wrapper around [`System::eval_into`].
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }
}

/// Errors raised while building problems or starting points.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("unknown problem id {0} (expected 1..=10)")]
    UnknownProblem(u32),
    #[error("unknown problem name `{0}`")]
    UnknownProblemName(String),
    #[error("problem {id} needs n >= {min}, got {n}")]
    DimensionTooSmall { id: u32, n: usize, min: usize },
    #[error("unknown initial point id {0} (expected 1..=10)")]
    UnknownInitialPoint(u32),
    #[error("dimension must be positive")]
    ZeroDimension,
}

/// Per-evaluation cost of a residual map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalCost {
    /// O(n) per evaluation.
    Linear,
    /// O(n^2) per evaluation (dense coupling).
    Quadratic,
}

/// Which of the ten residual maps a [`Problem`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Kind {
    ModifiedExponential,
    Logarithmic,
    StrictlyConvex1,
    StrictlyConvex2,
    TridiagonalExponential,
    EngvalGradient,
    ChandrasekharH,
    ModifiedCubic,
    Nonsmooth1,
    Nonsmooth2,
}

const KINDS: [(Kind, &str, &str); 10] = [
    (Kind::ModifiedExponential, "modified-exponential", "Modified exponential function"),
    (Kind::Logarithmic, "logarithmic", "Logarithmic function"),
    (Kind::StrictlyConvex1, "strictly-convex-1", "Strictly convex function I"),
    (Kind::StrictlyConvex2, "strictly-convex-2", "Modified strictly convex function II"),
    (Kind::TridiagonalExponential, "tridiagonal-exponential", "Tridiagonal exponential function"),
    (Kind::EngvalGradient, "engval-gradient", "Gradient of Engval function"),
    (Kind::ChandrasekharH, "chandrasekhar-h", "Chandrasekhar H-equation"),
    (Kind::ModifiedCubic, "modified-cubic", "Modified cubic coupling (Luksan 3.34)"),
    (Kind::Nonsmooth1, "nonsmooth-1", "Nonsmooth function 1"),
    (Kind::Nonsmooth2, "nonsmooth-2", "Nonsmooth function 2"),
];

/// Chandrasekhar H-equation albedo parameter.
pub const CHANDRASEKHAR_C: f64 = 0.9;

/// Default benchmark cap on the dimension of the O(n^2) H-equation problem.
pub const CHANDRASEKHAR_DIM_CAP: usize = 10_000;

/// One of the ten benchmark systems at a fixed dimension.
///
/// Immutable after construction; evaluation touches no shared state, so a
/// `Problem` can be evaluated from many threads at once.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    id: u32,
    n: usize,
    kind: Kind,
    // Quadrature nodes (i - 0.5)/n, only populated for the H-equation.
    nodes: Vec<f64>,
}

impl Problem {
    /// Builds problem `id` (1..=10) at dimension `n`.
    pub fn new(id: u32, n: usize) -> Result<Self, ProblemError> {
        let kind = match id {
            1..=10 => KINDS[(id - 1) as usize].0,
            _ => return Err(ProblemError::UnknownProblem(id)),
        };
        let min = Self::min_dim(id);
        if n < min {
            return Err(ProblemError::DimensionTooSmall { id, n, min });
        }
        let nodes = if kind == Kind::ChandrasekharH {
            let nf = n as f64;
            (1..=n).map(|i| (i as f64 - 0.5) / nf).collect()
        } else {
            Vec::new()
        };
        Ok(Self { id, n, kind, nodes })
    }

    /// Looks a problem up by its numeric id or short name (e.g. `"7"` or
    /// `"chandrasekhar-h"`).
    pub fn from_name(name: &str, n: usize) -> Result<Self, ProblemError> {
        Self::new(Self::id_from_name(name)?, n)
    }

    /// Resolves a numeric id or short name to a problem id.
    pub fn id_from_name(name: &str) -> Result<u32, ProblemError> {
        if let Ok(id) = name.trim().parse::<u32>() {
            return Ok(id);
        }
        KINDS
            .iter()
            .position(|(_, short, _)| short.eq_ignore_ascii_case(name.trim()))
            .map(|i| i as u32 + 1)
            .ok_or_else(|| ProblemError::UnknownProblemName(name.to_string()))
    }

    /// Smallest admissible dimension for problem `id`.
    pub fn min_dim(id: u32) -> usize {
        match id {
            5 | 6 => 3,
            _ => 2,
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    /// Short machine-friendly name.
    pub fn name(&self) -> &'static str {
        KINDS[(self.id - 1) as usize].1
    }

    /// Descriptive title.
    pub fn title(&self) -> &'static str {
        KINDS[(self.id - 1) as usize].2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval_cost(&self) -> EvalCost {
        match self.kind {
            Kind::ChandrasekharH => EvalCost::Quadratic,
            _ => EvalCost::Linear,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{} {} (n={})", self.id, self.name(), self.n)
    }
}

impl System for Problem {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n, "x has wrong length");
        assert_eq!(out.len(), n, "output has wrong length");
        let nf = n as f64;

        match self.kind {
            Kind::ModifiedExponential => {
                // F_n follows the interior formula.
                out[0] = x[0].exp() - 1.0;
                for i in 1..n {
                    out[i] = x[i].exp() + x[i] - 1.0;
                }
            }
            Kind::Logarithmic => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = (xi + 1.0).ln() - xi / nf;
                }
            }
            Kind::StrictlyConvex1 => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = xi.exp() - 1.0;
                }
            }
            Kind::StrictlyConvex2 => {
                let denom = nf + 1.0;
                for (i, (o, &xi)) in out.iter_mut().zip(x).enumerate() {
                    *o = ((i + 1) as f64 / denom) * xi.exp() - 1.0;
                }
            }
            Kind::TridiagonalExponential => {
                let h = 1.0 / (nf + 1.0);
                out[0] = x[0] - (h * (x[0] + x[1])).cos().exp();
                for i in 1..n - 1 {
                    out[i] = x[i] - (h * (x[i - 1] + x[i] + x[i + 1])).cos().exp();
                }
                out[n - 1] = x[n - 1] - (h * (x[n - 2] + x[n - 1])).cos().exp();
            }
            Kind::EngvalGradient => {
                out[0] = x[0] * (x[0] * x[0] + x[1] * x[1]) - 1.0;
                for i in 1..n - 1 {
                    out[i] = x[i] * (x[i - 1] * x[i - 1] + 2.0 * x[i] * x[i] + x[i + 1] * x[i + 1])
                        - 1.0;
                }
                out[n - 1] = x[n - 1] * (x[n - 2] * x[n - 2] + x[n - 1] * x[n - 1]);
            }
            Kind::ChandrasekharH => {
                // Direct O(n^2) double sum.
                let scale = CHANDRASEKHAR_C / (2.0 * nf);
                for i in 0..n {
                    let di = self.nodes[i];
                    let mut sum = 0.0;
                    for j in 0..n {
                        sum += di * x[j] / (di + self.nodes[j]);
                    }
                    out[i] = x[i] - 1.0 / (1.0 - scale * sum);
                }
            }
            Kind::ModifiedCubic => {
                for i in 0..n - 1 {
                    out[i] = x[i] - x[i + 1].powi(3) / 100.0;
                }
                out[n - 1] = x[n - 1] - x[n - 1].powi(3) / 100.0;
            }
            Kind::Nonsmooth1 => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = xi - (xi - 1.0).abs().sin();
                }
            }
            Kind::Nonsmooth2 => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = 2.0 * xi - xi.abs().sin();
                }
            }
        }
    }
}

/// Builds problem `id` at dimension `n`.
pub fn make_problem(id: u32, n: usize) -> Result<Problem, ProblemError> {
    Problem::new(id, n)
}

/// Identifies one of the ten starting-point families at a given dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InitialPointSpec {
    pub id: u32,
    pub n: usize,
    /// Only consulted for the random family (id 10).
    pub seed: u64,
}

impl InitialPointSpec {
    pub fn new(id: u32, n: usize) -> Self {
        Self { id, n, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Whether the generated point depends on the seed.
    pub fn is_random(&self) -> bool {
        self.id == 10
    }
}

/// Generates the starting point described by `spec`.
///
/// | id | point |
/// |----|-------|
/// | 1  | `(1, ..., 1)` |
/// | 2  | `(0.1, ..., 0.1)` |
/// | 3  | `(1/2, 1/4, ..., 1/2^n)` |
/// | 4  | `(1 - 1/n, 1 - 2/n, ..., 0)` |
/// | 5  | `(0, 1/n, ..., (n-1)/n)` |
/// | 6  | `(1, 1/2, ..., 1/n)` |
/// | 7  | `((n-1)/n, (n-2)/n, ..., 0)` |
/// | 8  | `(1/n, 2/n, ..., 1)` |
/// | 9  | `(10, ..., 10)` |
/// | 10 | uniform on `(0, 1)` from a ChaCha8 stream seeded with `spec.seed` |
///
/// The powers of two in family 3 underflow to zero for very large `n`.
pub fn initial_point(spec: InitialPointSpec) -> Result<Vec<f64>, ProblemError> {
    let n = spec.n;
    if n == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    let nf = n as f64;
    let x = match spec.id {
        1 => vec![1.0; n],
        2 => vec![0.1; n],
        3 => (1..=n).map(|i| 0.5f64.powi(i.min(i32::MAX as usize) as i32)).collect(),
        4 => (1..=n).map(|i| 1.0 - i as f64 / nf).collect(),
        5 => (0..n).map(|i| i as f64 / nf).collect(),
        6 => (1..=n).map(|i| 1.0 / i as f64).collect(),
        7 => (1..=n).map(|i| (n - i) as f64 / nf).collect(),
        8 => (1..=n).map(|i| i as f64 / nf).collect(),
        9 => vec![10.0; n],
        10 => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..n).map(|_| open_unit(&mut rng)).collect()
        }
        other => return Err(ProblemError::UnknownInitialPoint(other)),
    };
    Ok(x)
}

// Uniform sample from the open interval (0, 1).
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.gen();
        if v > 0.0 {
            return v;
        }
    }
}
