//! Box-constrained minimisation problems and the native benchmark suite.
//!
//! The benchmark functions are plain analogues of a subset of the noiseless
//! BBOB functions: each one is shifted so that its optimum sits at a seeded
//! position inside `[-4, 4]^d` with optimum value `0`, but no rotation or
//! oscillation transformations are applied.

use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("bound vectors have lengths {lower} and {upper}, expected {dimension}")]
    BoundLength {
        dimension: usize,
        lower: usize,
        upper: usize,
    },
    #[error("lower bound {lower} is not below upper bound {upper} in dimension {index}")]
    EmptyInterval { index: usize, lower: f64, upper: f64 },
    #[error("expected a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("benchmark `{name}` needs at least {min} dimensions, got {dimension}")]
    TooFewDimensions {
        name: &'static str,
        min: usize,
        dimension: usize,
    },
}

/// Feasible box `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProblemError> {
        if lower.is_empty() {
            return Err(ProblemError::ZeroDimension);
        }
        if lower.len() != upper.len() {
            return Err(ProblemError::BoundLength {
                dimension: lower.len(),
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            // also rejects NaN bounds
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(ProblemError::EmptyInterval {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` in every one of `dimension` axes.
    pub fn uniform(dimension: usize, lower: f64, upper: f64) -> Result<Self, ProblemError> {
        Self::new(vec![lower; dimension], vec![upper; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    /// Draws every component uniformly in its interval.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| rng.random_range(lo..=hi))
            .collect()
    }

    /// Componentwise `min(upper, max(lower, x))`.
    pub fn clip(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.clip_in_place(&mut out);
        out
    }

    pub fn clip_in_place(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.max(lo).min(hi);
        }
    }
}

type Evaluator = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A deterministic objective `f: R^d -> R` with a shared evaluation counter.
///
/// Clones share the counter, so every selector holding a clone contributes
/// to the same total.
#[derive(Clone)]
pub struct ObjectiveFunction {
    identifier: String,
    dimension: usize,
    evaluator: Arc<Evaluator>,
    optimum_value: Option<f64>,
    optimum_position: Option<Vec<f64>>,
    evaluations: Arc<AtomicU64>,
}

impl fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("identifier", &self.identifier)
            .field("dimension", &self.dimension)
            .field("optimum_value", &self.optimum_value)
            .field("evaluations", &self.evaluation_count())
            .finish()
    }
}

impl ObjectiveFunction {
    pub fn new<F>(identifier: impl Into<String>, dimension: usize, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            identifier: identifier.into(),
            dimension,
            evaluator: Arc::new(evaluator),
            optimum_value: None,
            optimum_position: None,
            evaluations: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn with_optimum(mut self, value: f64, position: Option<Vec<f64>>) -> Self {
        self.optimum_value = Some(value);
        self.optimum_position = position;
        self
    }

    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn optimum_value(&self) -> Option<f64> {
        self.optimum_value
    }

    pub fn optimum_position(&self) -> Option<&[f64]> {
        self.optimum_position.as_deref()
    }

    pub fn evaluation_count(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError> {
        if x.len() != self.dimension {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        Ok((self.evaluator)(x))
    }

    /// A handle with the same evaluator but its own zeroed counter.
    pub fn fresh_counter(&self) -> Self {
        Self {
            evaluations: Arc::new(AtomicU64::new(0)),
            ..self.clone()
        }
    }
}

/// Names accepted by [`make_benchmark`].
pub const BENCHMARK_NAMES: [&str; 9] = [
    "sphere",
    "ellipsoid_separable",
    "rastrigin_separable",
    "attractive_sector",
    "rosenbrock",
    "ellipsoid",
    "bent_cigar",
    "rastrigin",
    "schwefel",
];

/// Half-width of the box the optimum shift is drawn from.
pub const SHIFT_RADIUS: f64 = 4.0;

/// Canonical search box `[-5, 5]^d` for the benchmark suite.
pub fn benchmark_domain(dimension: usize) -> Result<SearchDomain, ProblemError> {
    SearchDomain::uniform(dimension, -5.0, 5.0)
}

/// Draws the optimum location uniformly in `[-4, 4]^d`.
pub fn sample_shift(dimension: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dimension)
        .map(|_| rng.random_range(-SHIFT_RADIUS..=SHIFT_RADIUS))
        .collect()
}

/// Builds a benchmark with its optimum at a seeded random shift.
pub fn make_benchmark(name: &str, dimension: usize, shift_seed: u64) -> Result<ObjectiveFunction, ProblemError> {
    make_benchmark_with_shift(name, sample_shift(dimension, shift_seed))
}

/// Builds a benchmark with its optimum at `shift` (use zeros for the
/// unshifted function).
pub fn make_benchmark_with_shift(name: &str, shift: Vec<f64>) -> Result<ObjectiveFunction, ProblemError> {
    let d = shift.len();
    if d == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    let kind = BenchmarkKind::parse(name)?;
    if kind == BenchmarkKind::Rosenbrock && d < 2 {
        return Err(ProblemError::TooFewDimensions {
            name: "rosenbrock",
            min: 2,
            dimension: d,
        });
    }
    let offsets = shift.clone();
    let f = ObjectiveFunction::new(kind.name(), d, move |x: &[f64]| {
        let z: Vec<f64> = x.iter().zip(&offsets).map(|(a, b)| a - b).collect();
        kind.eval_centred(&z)
    });
    Ok(f.with_optimum(0.0, Some(shift)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BenchmarkKind {
    Sphere,
    EllipsoidSeparable,
    RastriginSeparable,
    AttractiveSector,
    Rosenbrock,
    Ellipsoid,
    BentCigar,
    Rastrigin,
    Schwefel,
}

// Minimiser of -z sin(sqrt|z|) on [-500, 500].
const SCHWEFEL_ARGMIN: f64 = 420.968_746_227_503_6;

impl BenchmarkKind {
    fn parse(name: &str) -> Result<Self, ProblemError> {
        Ok(match name {
            "sphere" => Self::Sphere,
            "ellipsoid_separable" => Self::EllipsoidSeparable,
            "rastrigin_separable" => Self::RastriginSeparable,
            "attractive_sector" => Self::AttractiveSector,
            "rosenbrock" => Self::Rosenbrock,
            "ellipsoid" => Self::Ellipsoid,
            "bent_cigar" => Self::BentCigar,
            "rastrigin" => Self::Rastrigin,
            "schwefel" => Self::Schwefel,
            other => return Err(ProblemError::UnknownBenchmark(other.to_string())),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::EllipsoidSeparable => "ellipsoid_separable",
            Self::RastriginSeparable => "rastrigin_separable",
            Self::AttractiveSector => "attractive_sector",
            Self::Rosenbrock => "rosenbrock",
            Self::Ellipsoid => "ellipsoid",
            Self::BentCigar => "bent_cigar",
            Self::Rastrigin => "rastrigin",
            Self::Schwefel => "schwefel",
        }
    }

    /// Value at offset `z = x - x_opt`; zero at `z = 0`.
    fn eval_centred(self, z: &[f64]) -> f64 {
        match self {
            Self::Sphere => z.iter().map(|v| v * v).sum(),
            Self::EllipsoidSeparable | Self::Ellipsoid => ellipsoid(z),
            Self::RastriginSeparable | Self::Rastrigin => rastrigin(z),
            Self::AttractiveSector => {
                let s: f64 = z
                    .iter()
                    .map(|&v| {
                        let w = if v > 0.0 { 100.0 } else { 1.0 };
                        (w * v) * (w * v)
                    })
                    .sum();
                s.powf(0.9)
            }
            Self::Rosenbrock => z
                .windows(2)
                .map(|w| {
                    // optimum of the classic form sits at ones
                    let (a, b) = (w[0] + 1.0, w[1] + 1.0);
                    100.0 * (a * a - b).powi(2) + (a - 1.0).powi(2)
                })
                .sum(),
            Self::BentCigar => z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>(),
            Self::Schwefel => {
                let base = schwefel_term(SCHWEFEL_ARGMIN);
                z.iter()
                    .map(|&v| schwefel_term(SCHWEFEL_ARGMIN + 100.0 * v) - base)
                    .sum()
            }
        }
    }
}

fn ellipsoid(z: &[f64]) -> f64 {
    let d = z.len();
    if d == 1 {
        return z[0] * z[0];
    }
    z.iter()
        .enumerate()
        .map(|(i, v)| 10f64.powf(6.0 * i as f64 / (d - 1) as f64) * v * v)
        .sum()
}

fn rastrigin(z: &[f64]) -> f64 {
    z.iter()
        .map(|&v| v * v + 10.0 * (1.0 - (2.0 * PI * v).cos()))
        .sum()
}

/// `-z sin(sqrt|z|)` inside `[-500, 500]`, clamped with a quadratic penalty
/// outside so the global minimum stays at [`SCHWEFEL_ARGMIN`].
fn schwefel_term(z: f64) -> f64 {
    let clamped = z.clamp(-500.0, 500.0);
    let excess = z.abs() - 500.0;
    let penalty = if excess > 0.0 { excess * excess } else { 0.0 };
    -clamped * clamped.abs().sqrt().sin() + penalty
}
