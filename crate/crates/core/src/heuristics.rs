//! Spiking conditions, thresholds and spike-triggered rules.
//!
//! A neuron either follows its dynamics or, when the combined spiking
//! condition holds, jumps by a spike rule. The self-spiking predicate is
//! also what the unit reports as its spike signal.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::NeuroState;

/// Noise level of the reset used when a DE rule lacks neighbours.
pub const FALLBACK_SIGMA: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum HeuristicError {
    #[error("threshold gain must be positive, got {0}")]
    ThresholdGain(f64),
    #[error("Minkowski order must be >= 1, got {0}")]
    MinkowskiOrder(f64),
    #[error("Minkowski weights must lie in [0, 1] and have unit length")]
    MinkowskiWeights,
    #[error("shrinking-ball radius must be positive, got {0}")]
    BallRadius(f64),
    #[error("disc thresholds need 0 < attractor < repeller, got {0} and {1}")]
    DiscThresholds(f64, f64),
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// `alpha_thr`
    Fixed,
    /// `alpha_thr |g_j - p_j|`
    #[default]
    GlobalSelfGap,
    /// `alpha_thr |x_ref_j - p_j|`
    RefSelfGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub kind: ThresholdKind,
    pub alpha_thr: f64,
}

impl ThresholdRule {
    pub fn new(kind: ThresholdKind, alpha_thr: f64) -> Result<Self, HeuristicError> {
        let rule = Self { kind, alpha_thr };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), HeuristicError> {
        if self.alpha_thr > 0.0 && self.alpha_thr.is_finite() {
            Ok(())
        } else {
            Err(HeuristicError::ThresholdGain(self.alpha_thr))
        }
    }
}

/// Threshold `theta_j` for one dimension.
pub fn threshold(rule: &ThresholdRule, g_j: f64, p_j: f64, xref_j: f64) -> f64 {
    match rule.kind {
        ThresholdKind::Fixed => rule.alpha_thr,
        ThresholdKind::GlobalSelfGap => rule.alpha_thr * (g_j - p_j).abs(),
        ThresholdKind::RefSelfGap => rule.alpha_thr * (xref_j - p_j).abs(),
    }
}

/// Self-spiking predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpikeCondition {
    /// `|v1| >= theta`
    AbsThreshold,
    /// `||w * v||_q > theta`
    WeightedMinkowski { q: f64, weights: [f64; 2] },
    /// `||v||_2 < epsilon / (1 + t)`
    ShrinkingBall { epsilon: f64 },
    /// `||v||_2 <= attractor` for `tr(A) <= 0`, `||v||_2 >= repeller` otherwise.
    Disc { theta_attractor: f64, theta_repeller: f64 },
}

impl SpikeCondition {
    pub fn validate(&self) -> Result<(), HeuristicError> {
        match *self {
            SpikeCondition::AbsThreshold => Ok(()),
            SpikeCondition::WeightedMinkowski { q, weights } => {
                if q.is_nan() || q < 1.0 {
                    return Err(HeuristicError::MinkowskiOrder(q));
                }
                let in_box = weights.iter().all(|w| (0.0..=1.0).contains(w));
                let norm = weights[0].hypot(weights[1]);
                if !in_box || (norm - 1.0).abs() > 1e-9 {
                    return Err(HeuristicError::MinkowskiWeights);
                }
                Ok(())
            }
            SpikeCondition::ShrinkingBall { epsilon } => {
                if epsilon > 0.0 {
                    Ok(())
                } else {
                    Err(HeuristicError::BallRadius(epsilon))
                }
            }
            SpikeCondition::Disc {
                theta_attractor,
                theta_repeller,
            } => {
                if 0.0 < theta_attractor && theta_attractor < theta_repeller {
                    Ok(())
                } else {
                    Err(HeuristicError::DiscThresholds(theta_attractor, theta_repeller))
                }
            }
        }
    }

    /// Whether the condition reads the threshold rule.
    pub fn uses_threshold(&self) -> bool {
        matches!(self, SpikeCondition::AbsThreshold | SpikeCondition::WeightedMinkowski { .. })
    }
}

/// Self-spiking predicate `phi_s`.
///
/// `theta` is only read by the threshold-based conditions and
/// `model_trace` only by [`SpikeCondition::Disc`].
pub fn phi_s(cond: &SpikeCondition, v: NeuroState, t: u64, theta: f64, model_trace: f64) -> bool {
    match *cond {
        SpikeCondition::AbsThreshold => v.v1().abs() >= theta,
        SpikeCondition::WeightedMinkowski { q, weights } => {
            let a = (weights[0] * v.v1()).abs();
            let b = (weights[1] * v.v2()).abs();
            let norm = if q == 2.0 {
                a.hypot(b)
            } else if q.is_infinite() {
                a.max(b)
            } else {
                (a.powf(q) + b.powf(q)).powf(1.0 / q)
            };
            norm > theta
        }
        SpikeCondition::ShrinkingBall { epsilon } => v.norm2() < epsilon / (1.0 + t as f64),
        SpikeCondition::Disc {
            theta_attractor,
            theta_repeller,
        } => {
            if model_trace <= 0.0 {
                v.norm2() <= theta_attractor
            } else {
                v.norm2() >= theta_repeller
            }
        }
    }
}

/// Full spiking condition: self spike or neighbour-induced activation.
pub fn phi(cond: &SpikeCondition, v: NeuroState, t: u64, theta: f64, activation: bool, model_trace: f64) -> bool {
    phi_s(cond, v, t, theta, model_trace) || activation
}

/// State the directional rule moves toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectionTarget {
    SelfBest,
    #[default]
    GlobalBest,
    /// Midpoint of the self and global best states.
    Blend,
}

/// Spike-triggered perturbation of a neuron state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpikeRule {
    /// Fresh standard-normal state.
    RandomReset,
    /// Self-best state plus `N(0, sigma)` noise.
    FixedReset { sigma: f64 },
    /// `v + alpha_d (v_target - v) + N(0, sigma)`.
    Directional {
        alpha_d: f64,
        sigma: f64,
        target: DirectionTarget,
    },
    /// DE/current-to-best/1: `v + F (v_g - v) + F (v_r1 - v_r2)`.
    DeCurrentToBest { f: f64 },
    /// DE/current-to-rand/1: `v + F (v_r1 - v) + F (v_r2 - v_r3)`.
    DeCurrentToRand { f: f64 },
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<(), HeuristicError> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(HeuristicError::OutOfRange { name, value, range })
    }
}

impl SpikeRule {
    pub fn validate(&self) -> Result<(), HeuristicError> {
        match *self {
            SpikeRule::RandomReset => Ok(()),
            SpikeRule::FixedReset { sigma } => check_range("sigma", sigma, 0.0, f64::MAX, ">= 0"),
            SpikeRule::Directional { alpha_d, sigma, .. } => {
                check_range("sigma", sigma, 0.0, f64::MAX, ">= 0")?;
                if alpha_d > 0.0 && alpha_d.is_finite() {
                    Ok(())
                } else {
                    Err(HeuristicError::OutOfRange {
                        name: "alpha_d",
                        value: alpha_d,
                        range: "> 0",
                    })
                }
            }
            SpikeRule::DeCurrentToBest { f } | SpikeRule::DeCurrentToRand { f } => {
                check_range("F", f, 0.0, 2.0, "[0, 2]")
            }
        }
    }

    /// Neighbour states needed by the rule.
    pub fn required_neighbours(&self) -> usize {
        match self {
            SpikeRule::DeCurrentToBest { .. } => 2,
            SpikeRule::DeCurrentToRand { .. } => 3,
            _ => 0,
        }
    }
}

/// Componentwise binomial crossover applied after a spike rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialCrossover {
    pub p_cr: f64,
}

impl BinomialCrossover {
    pub fn validate(&self) -> Result<(), HeuristicError> {
        check_range("p_cr", self.p_cr, 0.0, 1.0, "[0, 1]")
    }

    /// Keeps each component of `mutated` with probability `p_cr`, else the
    /// component of `original`.
    pub fn apply<R: Rng + ?Sized>(&self, original: NeuroState, mutated: NeuroState, rng: &mut R) -> NeuroState {
        let mut out = original;
        for k in 0..2 {
            let r: f64 = rng.random();
            if r < self.p_cr {
                out.0[k] = mutated.0[k];
            }
        }
        out
    }
}

/// Encoded best information available to a spike rule.
#[derive(Debug, Clone, Copy)]
pub struct SpikeContext<'a> {
    pub self_best: NeuroState,
    pub global_best: NeuroState,
    pub neighbours: &'a [NeuroState],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeOutcome {
    pub state: NeuroState,
    /// The requested rule lacked neighbours and a fixed reset ran instead.
    pub fallback: bool,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> NeuroState {
    if sigma == 0.0 {
        return NeuroState::ZERO;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated as finite and non-negative");
    NeuroState([normal.sample(rng), normal.sample(rng)])
}

fn fixed_reset<R: Rng + ?Sized>(ctx: &SpikeContext<'_>, sigma: f64, rng: &mut R) -> NeuroState {
    ctx.self_best + gaussian(rng, sigma)
}

/// Applies `rule` to the state `v` of one neuron.
pub fn apply_spike_rule<R: Rng + ?Sized>(
    rule: &SpikeRule,
    v: NeuroState,
    ctx: &SpikeContext<'_>,
    rng: &mut R,
) -> SpikeOutcome {
    if ctx.neighbours.len() < rule.required_neighbours() {
        return SpikeOutcome {
            state: fixed_reset(ctx, FALLBACK_SIGMA, rng),
            fallback: true,
        };
    }
    let state = match *rule {
        SpikeRule::RandomReset => NeuroState([StandardNormal.sample(rng), StandardNormal.sample(rng)]),
        SpikeRule::FixedReset { sigma } => fixed_reset(ctx, sigma, rng),
        SpikeRule::Directional { alpha_d, sigma, target } => {
            let goal = match target {
                DirectionTarget::SelfBest => ctx.self_best,
                DirectionTarget::GlobalBest => ctx.global_best,
                DirectionTarget::Blend => (ctx.self_best + ctx.global_best) * 0.5,
            };
            v + (goal - v) * alpha_d + gaussian(rng, sigma)
        }
        SpikeRule::DeCurrentToBest { f } => {
            let picks = index::sample(rng, ctx.neighbours.len(), 2);
            let (r1, r2) = (ctx.neighbours[picks.index(0)], ctx.neighbours[picks.index(1)]);
            v + (ctx.global_best - v) * f + (r1 - r2) * f
        }
        SpikeRule::DeCurrentToRand { f } => {
            let picks = index::sample(rng, ctx.neighbours.len(), 3);
            let r1 = ctx.neighbours[picks.index(0)];
            let r2 = ctx.neighbours[picks.index(1)];
            let r3 = ctx.neighbours[picks.index(2)];
            v + (r1 - v) * f + (r2 - r3) * f
        }
    };
    SpikeOutcome { state, fallback: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    #[test]
    fn threshold_variants() {
        let fixed = ThresholdRule::new(ThresholdKind::Fixed, 30.0).unwrap();
        assert_eq!(threshold(&fixed, 1.0, 2.0, 3.0), 30.0);
        let gap = ThresholdRule::new(ThresholdKind::GlobalSelfGap, 0.5).unwrap();
        assert_eq!(threshold(&gap, 2.0, -1.0, 0.0), 1.5);
        assert_eq!(threshold(&gap, 0.7, 0.7, 0.0), 0.0);
        let refgap = ThresholdRule::new(ThresholdKind::RefSelfGap, 2.0).unwrap();
        assert_eq!(threshold(&refgap, 9.0, 1.0, 0.5), 1.0);
        assert!(ThresholdRule::new(ThresholdKind::Fixed, 0.0).is_err());
    }

    #[test]
    fn degenerate_gap_spikes_on_any_nonzero_potential() {
        let gap = ThresholdRule::new(ThresholdKind::GlobalSelfGap, 3.0).unwrap();
        let theta = threshold(&gap, 1.0, 1.0, 0.0);
        assert!(phi_s(&SpikeCondition::AbsThreshold, NeuroState::new(1e-9, 0.0), 0, theta, 0.0));
    }

    #[test]
    fn abs_threshold_is_inclusive() {
        assert!(phi_s(&SpikeCondition::AbsThreshold, NeuroState::new(30.0, 0.0), 0, 30.0, 0.0));
        assert!(phi_s(&SpikeCondition::AbsThreshold, NeuroState::new(-30.0, 0.0), 0, 30.0, 0.0));
        assert!(!phi_s(&SpikeCondition::AbsThreshold, NeuroState::new(29.9, 0.0), 0, 30.0, 0.0));
    }

    #[test]
    fn minkowski_is_strict() {
        let c = SpikeCondition::WeightedMinkowski { q: 2.0, weights: [1.0, 0.0] };
        assert!(!phi_s(&c, NeuroState::new(2.0, 100.0), 0, 2.0, 0.0));
        assert!(phi_s(&c, NeuroState::new(2.0001, 0.0), 0, 2.0, 0.0));
        let l1 = SpikeCondition::WeightedMinkowski { q: 1.0, weights: [0.6, 0.8] };
        // 0.6 * 1 + 0.8 * 1 = 1.4
        assert!(phi_s(&l1, NeuroState::new(1.0, -1.0), 0, 1.39, 0.0));
        assert!(!phi_s(&l1, NeuroState::new(1.0, -1.0), 0, 1.41, 0.0));
    }

    #[test]
    fn shrinking_ball_tightens() {
        let c = SpikeCondition::ShrinkingBall { epsilon: 1.0 };
        let v = NeuroState::new(0.5, 0.5);
        assert!(phi_s(&c, v, 0, 0.0, 0.0));
        assert!(!phi_s(&c, v, 1, 0.0, 0.0));
    }

    #[test]
    fn disc_uses_trace_sign() {
        let c = SpikeCondition::Disc {
            theta_attractor: 0.5,
            theta_repeller: 1.5,
        };
        assert!(phi_s(&c, NeuroState::new(0.3, 0.3), 0, 0.0, -2.0));
        assert!(!phi_s(&c, NeuroState::new(0.3, 0.3), 0, 0.0, 1.0));
        assert!(phi_s(&c, NeuroState::new(1.2, 1.2), 0, 0.0, 1.0));
    }

    #[test]
    fn condition_validation() {
        assert!(SpikeCondition::WeightedMinkowski { q: 0.5, weights: [1.0, 0.0] }.validate().is_err());
        assert!(SpikeCondition::WeightedMinkowski { q: 2.0, weights: [1.0, 1.0] }.validate().is_err());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(SpikeCondition::WeightedMinkowski { q: 2.0, weights: [h, h] }.validate().is_ok());
        assert!(SpikeCondition::ShrinkingBall { epsilon: 0.0 }.validate().is_err());
        assert!(SpikeCondition::Disc { theta_attractor: 1.5, theta_repeller: 0.5 }.validate().is_err());
    }

    #[test]
    fn phi_is_disjunction() {
        let c = SpikeCondition::AbsThreshold;
        for (self_spike, act) in [(false, false), (false, true), (true, false), (true, true)] {
            let v = NeuroState::new(if self_spike { 2.0 } else { 0.5 }, 0.0);
            assert_eq!(phi(&c, v, 0, 1.0, act, 0.0), self_spike || act);
        }
    }

    #[test]
    fn fixed_reset_without_noise_is_self_best() {
        let ctx = SpikeContext {
            self_best: NeuroState::new(0.25, -1.0),
            global_best: NeuroState::ZERO,
            neighbours: &[],
        };
        let out = apply_spike_rule(&SpikeRule::FixedReset { sigma: 0.0 }, NeuroState::new(9.0, 9.0), &ctx, &mut rng());
        assert_eq!(out.state, ctx.self_best);
        assert!(!out.fallback);
    }

    #[test]
    fn current_to_best_by_hand() {
        // with F = 1 only the order of the sampled pair matters
        let neighbours = [NeuroState::new(2.0, 0.0), NeuroState::new(0.0, 2.0)];
        let ctx = SpikeContext {
            self_best: NeuroState::ZERO,
            global_best: NeuroState::new(1.0, 1.0),
            neighbours: &neighbours,
        };
        let mut seen = Vec::new();
        let mut r = rng();
        for _ in 0..64 {
            let out = apply_spike_rule(&SpikeRule::DeCurrentToBest { f: 1.0 }, NeuroState::ZERO, &ctx, &mut r);
            seen.push(out.state);
        }
        assert!(seen.contains(&NeuroState::new(3.0, -1.0)));
        assert!(seen.iter().all(|s| *s == NeuroState::new(3.0, -1.0) || *s == NeuroState::new(-1.0, 3.0)));
    }

    #[test]
    fn current_to_rand_indices_are_distinct() {
        // distinct one-hot neighbours: any repeated index would show up as a
        // zero difference or a doubled weight
        let neighbours = [NeuroState::new(1.0, 0.0), NeuroState::new(0.0, 1.0), NeuroState::new(10.0, 10.0)];
        let ctx = SpikeContext {
            self_best: NeuroState::ZERO,
            global_best: NeuroState::ZERO,
            neighbours: &neighbours,
        };
        let mut r = rng();
        let valid: Vec<NeuroState> = {
            let p = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            p.iter()
                .map(|[a, b, c]| neighbours[*a] + neighbours[*b] - neighbours[*c])
                .collect()
        };
        for _ in 0..100 {
            let out = apply_spike_rule(&SpikeRule::DeCurrentToRand { f: 1.0 }, NeuroState::ZERO, &ctx, &mut r);
            assert!(valid.contains(&out.state), "{:?}", out.state);
        }
    }

    #[test]
    fn de_rules_fall_back_without_neighbours() {
        let neighbours = [NeuroState::new(1.0, 1.0), NeuroState::new(2.0, 2.0)];
        let ctx = SpikeContext {
            self_best: NeuroState::new(5.0, 5.0),
            global_best: NeuroState::ZERO,
            neighbours: &neighbours,
        };
        let out = apply_spike_rule(&SpikeRule::DeCurrentToRand { f: 0.5 }, NeuroState::ZERO, &ctx, &mut rng());
        assert!(out.fallback);
        assert!((out.state - ctx.self_best).norm2() < 1.0);
        let ok = apply_spike_rule(&SpikeRule::DeCurrentToBest { f: 0.5 }, NeuroState::ZERO, &ctx, &mut rng());
        assert!(!ok.fallback);
    }

    #[test]
    fn random_reset_is_finite_and_seeded() {
        let ctx = SpikeContext {
            self_best: NeuroState::ZERO,
            global_best: NeuroState::ZERO,
            neighbours: &[],
        };
        let a = apply_spike_rule(&SpikeRule::RandomReset, NeuroState::ZERO, &ctx, &mut rng());
        let b = apply_spike_rule(&SpikeRule::RandomReset, NeuroState::ZERO, &ctx, &mut rng());
        assert_eq!(a, b);
        assert!(a.state.is_finite());
    }

    #[test]
    fn crossover_extremes() {
        let old = NeuroState::new(1.0, 2.0);
        let new = NeuroState::new(3.0, 4.0);
        assert_eq!(BinomialCrossover { p_cr: 0.0 }.apply(old, new, &mut rng()), old);
        assert_eq!(BinomialCrossover { p_cr: 1.0 }.apply(old, new, &mut rng()), new);
        assert!(BinomialCrossover { p_cr: 1.5 }.validate().is_err());
    }

    #[test]
    fn rule_validation() {
        assert!(SpikeRule::DeCurrentToRand { f: 2.5 }.validate().is_err());
        assert!(SpikeRule::FixedReset { sigma: -1.0 }.validate().is_err());
        assert!(SpikeRule::Directional { alpha_d: 0.0, sigma: 0.1, target: DirectionTarget::Blend }.validate().is_err());
        assert!(SpikeRule::DeCurrentToBest { f: 0.5 }.validate().is_ok());
    }

    fn state() -> impl Strategy<Value = NeuroState> {
        (-50f64..50.0, -50f64..50.0).prop_map(|(a, b)| NeuroState::new(a, b))
    }

    proptest! {
        #[test]
        fn de_with_zero_f_and_no_crossover_is_identity(
            v in state(),
            nb in prop::collection::vec(state(), 3..12),
            g in state(),
            seed in any::<u64>(),
        ) {
            let ctx = SpikeContext { self_best: g, global_best: g, neighbours: &nb };
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            for rule in [SpikeRule::DeCurrentToBest { f: 0.0 }, SpikeRule::DeCurrentToRand { f: 0.0 }] {
                let out = apply_spike_rule(&rule, v, &ctx, &mut r);
                prop_assert_eq!(out.state, v);
                let crossed = BinomialCrossover { p_cr: 0.0 }.apply(v, out.state, &mut r);
                prop_assert_eq!(crossed, v);
            }
        }

        #[test]
        fn directional_full_step_hits_target(v in state(), sb in state(), gb in state()) {
            let ctx = SpikeContext { self_best: sb, global_best: gb, neighbours: &[] };
            let rule = SpikeRule::Directional { alpha_d: 1.0, sigma: 0.0, target: DirectionTarget::GlobalBest };
            let out = apply_spike_rule(&rule, v, &ctx, &mut rng());
            prop_assert!((out.state - gb).norm2() <= 1e-12 * (1.0 + v.norm2() + gb.norm2()));
        }

        #[test]
        fn shrinking_theta_never_unspikes(v in state(), theta in 0f64..100.0, shrink in 0f64..1.0) {
            let c = SpikeCondition::AbsThreshold;
            if phi_s(&c, v, 0, theta, 0.0) {
                prop_assert!(phi_s(&c, v, 0, theta * shrink, 0.0));
            }
        }

        #[test]
        fn rule_outputs_are_finite(v in state(), nb in prop::collection::vec(state(), 0..6), sb in state(), gb in state(), which in 0usize..5, seed in any::<u64>()) {
            let rules = [
                SpikeRule::RandomReset,
                SpikeRule::FixedReset { sigma: 0.3 },
                SpikeRule::Directional { alpha_d: 0.7, sigma: 0.1, target: DirectionTarget::Blend },
                SpikeRule::DeCurrentToBest { f: 2.0 },
                SpikeRule::DeCurrentToRand { f: 2.0 },
            ];
            let ctx = SpikeContext { self_best: sb, global_best: gb, neighbours: &nb };
            let out = apply_spike_rule(&rules[which], v, &ctx, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(out.state.is_finite());
        }
    }
}
