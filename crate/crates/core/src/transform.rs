//! Bidirectional mapping between a position component and its neuron state.
//!
//! A component `x_j` is encoded relative to a reference point `x_ref`:
//!
//! ```text
//! v1 = alpha * (x_j - x_ref_j)
//! v2 = 2 r_j - (1 - x_ref_j)
//! ```
//!
//! where `r_j ~ U(0, 1)` is drawn once per unit and dimension and retained
//! for the whole run. Only `v1` carries position, so decoding inverts the
//! first component alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::NeuroState;

/// Tolerance on the sum of reference weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("gain must be positive and finite, got {0}")]
    InvalidGain(f64),
    #[error("reference weights sum to {0}, expected 1")]
    WeightsNotNormalised(f64),
    #[error("expected {expected} reference weights, got {actual}")]
    WeightCount { expected: usize, actual: usize },
    #[error("the neighbour-averaged reference needs at least one neighbour")]
    NoNeighbours,
    #[error("vector of length {actual} where {expected} was expected")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// How the reference point `x_ref` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceStrategy {
    /// `w1 p + w2 g`
    #[default]
    #[serde(alias = "self_global_average")]
    SelfGlobal,
    /// `w1 p + w2 g + sum_k w_{k+2} p_k` over the unit's neighbourhood.
    #[serde(alias = "self_global_neighbour_average")]
    SelfGlobalNeighbour,
}

impl ReferenceStrategy {
    /// Number of weighted terms for a neighbourhood of size `m`.
    pub fn term_count(self, m: usize) -> usize {
        match self {
            ReferenceStrategy::SelfGlobal => 2,
            ReferenceStrategy::SelfGlobalNeighbour => 2 + m,
        }
    }
}

/// Parameters of one unit's mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformParams {
    gain: f64,
    retained_noise: Vec<f64>,
    strategy: ReferenceStrategy,
    weights: Option<Vec<f64>>,
}

impl TransformParams {
    /// `weights = None` means uniform weighting over all reference terms.
    pub fn new(
        gain: f64,
        retained_noise: Vec<f64>,
        strategy: ReferenceStrategy,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, TransformError> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(TransformError::InvalidGain(gain));
        }
        if let Some(w) = &weights {
            check_normalised(w)?;
        }
        Ok(Self {
            gain,
            retained_noise,
            strategy,
            weights,
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn strategy(&self) -> ReferenceStrategy {
        self.strategy
    }

    pub fn retained_noise(&self) -> &[f64] {
        &self.retained_noise
    }

    pub fn noise(&self, j: usize) -> f64 {
        self.retained_noise[j]
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Reference point for the current best information.
    pub fn xref(&self, p: &[f64], g: &[f64], neighbours: &[Vec<f64>]) -> Result<Vec<f64>, TransformError> {
        let terms = self.strategy.term_count(neighbours.len());
        let weights = match &self.weights {
            Some(w) => {
                if w.len() != terms {
                    return Err(TransformError::WeightCount {
                        expected: terms,
                        actual: w.len(),
                    });
                }
                w.clone()
            }
            None => uniform_weights(terms),
        };
        compute_xref(self.strategy, p, g, neighbours, &weights)
    }

    pub fn encode(&self, j: usize, x_j: f64, xref_j: f64) -> NeuroState {
        encode(x_j, xref_j, self.gain, self.retained_noise[j])
    }

    pub fn decode(&self, v: NeuroState, xref_j: f64) -> f64 {
        decode(v, xref_j, self.gain)
    }
}

fn check_normalised(w: &[f64]) -> Result<(), TransformError> {
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(TransformError::WeightsNotNormalised(sum));
    }
    Ok(())
}

pub fn uniform_weights(count: usize) -> Vec<f64> {
    vec![1.0 / count as f64; count]
}

/// Weighted reference point.
///
/// `weights` holds `w1, w2` for [`ReferenceStrategy::SelfGlobal`] and
/// `w1, w2, w3, ...` (one per neighbour) for
/// [`ReferenceStrategy::SelfGlobalNeighbour`].
pub fn compute_xref(
    strategy: ReferenceStrategy,
    p: &[f64],
    g: &[f64],
    neighbours: &[Vec<f64>],
    weights: &[f64],
) -> Result<Vec<f64>, TransformError> {
    let d = p.len();
    if g.len() != d {
        return Err(TransformError::DimensionMismatch {
            expected: d,
            actual: g.len(),
        });
    }
    let used: &[Vec<f64>] = match strategy {
        ReferenceStrategy::SelfGlobal => &[],
        ReferenceStrategy::SelfGlobalNeighbour => {
            if neighbours.is_empty() {
                return Err(TransformError::NoNeighbours);
            }
            neighbours
        }
    };
    let expected = strategy.term_count(used.len());
    if weights.len() != expected {
        return Err(TransformError::WeightCount {
            expected,
            actual: weights.len(),
        });
    }
    check_normalised(weights)?;
    if let Some(bad) = used.iter().find(|n| n.len() != d) {
        return Err(TransformError::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }

    let mut xref: Vec<f64> = p
        .iter()
        .zip(g)
        .map(|(&pj, &gj)| weights[0] * pj + weights[1] * gj)
        .collect();
    for (k, nb) in used.iter().enumerate() {
        let w = weights[k + 2];
        for (r, &v) in xref.iter_mut().zip(nb) {
            *r += w * v;
        }
    }
    Ok(xref)
}

/// Maps a position component to a neuron state.
pub fn encode(x_j: f64, xref_j: f64, gain: f64, r_j: f64) -> NeuroState {
    NeuroState::new(gain * (x_j - xref_j), 2.0 * r_j - (1.0 - xref_j))
}

/// Inverse of [`encode`]; reads the first state component only.
pub fn decode(v: NeuroState, xref_j: f64, gain: f64) -> f64 {
    v.v1() / gain + xref_j
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn self_global_mean() {
        let x = compute_xref(ReferenceStrategy::SelfGlobal, &[1.0, 0.0], &[0.0, 1.0], &[], &[0.5, 0.5]).unwrap();
        assert_eq!(x, vec![0.5, 0.5]);
    }

    #[test]
    fn fixed_point_when_p_equals_g() {
        let x = compute_xref(ReferenceStrategy::SelfGlobal, &[2.0, 2.0], &[2.0, 2.0], &[], &[0.3, 0.7]).unwrap();
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-15);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn neighbour_average_thirds() {
        let x = compute_xref(
            ReferenceStrategy::SelfGlobalNeighbour,
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[vec![1.0, 1.0]],
            &uniform_weights(3),
        )
        .unwrap();
        assert_relative_eq!(x[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(x[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn neighbour_strategy_needs_neighbours() {
        let err = compute_xref(ReferenceStrategy::SelfGlobalNeighbour, &[1.0], &[0.0], &[], &[0.5, 0.5]);
        assert_eq!(err, Err(TransformError::NoNeighbours));
    }

    #[test]
    fn weights_must_be_normalised() {
        assert!(matches!(
            compute_xref(ReferenceStrategy::SelfGlobal, &[1.0], &[0.0], &[], &[0.5, 0.6]),
            Err(TransformError::WeightsNotNormalised(_))
        ));
        assert!(TransformParams::new(1.0, vec![0.0], ReferenceStrategy::SelfGlobal, Some(vec![0.2, 0.2])).is_err());
        assert!(TransformParams::new(0.0, vec![0.0], ReferenceStrategy::SelfGlobal, None).is_err());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(0.5, 0.0, 1.0, 0.25), NeuroState::new(0.5, -0.5));
        assert_eq!(encode(1.5, 1.0, 2.0, 0.5), NeuroState::new(1.0, 1.0));
        assert_eq!(encode(3.0, 3.0, 7.0, 0.9).v1(), 0.0);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(NeuroState::new(1.0, 123.0), 1.0, 2.0), 1.5);
        assert_eq!(decode(NeuroState::new(0.0, -4.0), 0.75, 3.0), 0.75);
    }

    proptest! {
        #[test]
        fn round_trip(x in -5f64..5.0, xref in -5f64..5.0, r in 0f64..1.0, gi in 0usize..4) {
            let gain = [0.5, 1.0, 2.0, 10.0][gi];
            let back = decode(encode(x, xref, gain, r), xref, gain);
            prop_assert!((back - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0));
        }

        #[test]
        fn encode_is_affine_in_position(x in -50f64..50.0, dx in -5f64..5.0, xref in -5f64..5.0, r in 0f64..1.0, gain in 0.1f64..10.0) {
            let a = encode(x, xref, gain, r);
            let b = encode(x + dx, xref, gain, r);
            prop_assert!(((b.v1() - a.v1()) - gain * dx).abs() <= 1e-9 * (1.0 + gain * x.abs()));
            prop_assert_eq!(a.v2(), b.v2());
        }

        #[test]
        fn xref_in_convex_hull(
            p in prop::collection::vec(-5f64..5.0, 2),
            g in prop::collection::vec(-5f64..5.0, 2),
            nb in prop::collection::vec(prop::collection::vec(-5f64..5.0, 2), 1..6),
            raw in prop::collection::vec(0.01f64..1.0, 8),
        ) {
            let terms = 2 + nb.len();
            let total: f64 = raw[..terms].iter().sum();
            let mut w: Vec<f64> = raw[..terms].iter().map(|v| v / total).collect();
            let drift: f64 = 1.0 - w.iter().sum::<f64>();
            w[0] += drift;
            let x = compute_xref(ReferenceStrategy::SelfGlobalNeighbour, &p, &g, &nb, &w).unwrap();
            for j in 0..2 {
                let mut lo = p[j].min(g[j]);
                let mut hi = p[j].max(g[j]);
                for n in &nb {
                    lo = lo.min(n[j]);
                    hi = hi.max(n[j]);
                }
                prop_assert!(x[j] >= lo - 1e-12 && x[j] <= hi + 1e-12);
            }
        }
    }
}
