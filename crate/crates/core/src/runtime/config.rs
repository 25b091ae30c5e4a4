//! Run configuration and its resolution into concrete units.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coordination::{
    build_full, build_full_info, build_random_info, build_ring, InfoTopology, InfoTopologyKind, SpikeTopology,
    SpikeTopologyKind,
};
use crate::dynamics::{Integrator, IzhikevichModel, LifModel, LinearModel, NeuronModel, StabilityClass};
use crate::heuristics::{
    BinomialCrossover, DirectionTarget, SpikeCondition, SpikeRule, ThresholdKind, ThresholdRule,
};
use crate::problem::{make_benchmark, ObjectiveFunction, SearchDomain};
use crate::seed::{stream, StreamRole};
use crate::transform::{ReferenceStrategy, TransformParams};
use crate::unit::CoreParams;

use super::RunError;

/// Fraction of the domain width used as the default reset noise.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.05;
pub const DEFAULT_F: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ExecutionMode {
    /// Single-threaded lock-step sweep.
    #[default]
    #[serde(rename = "det", alias = "deterministic")]
    Deterministic,
    /// One thread per process, latest-wins mailboxes.
    #[serde(rename = "async", alias = "concurrent")]
    Concurrent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub function: String,
    pub dimension: usize,
    #[serde(default)]
    pub shift_seed: u64,
    #[serde(default = "default_lower")]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
}

fn default_lower() -> f64 {
    -5.0
}

fn default_upper() -> f64 {
    5.0
}

/// Per-core step budget, either absolute or per problem dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    Steps(u64),
    PerDimension { per_dimension: u64 },
}

impl Budget {
    pub fn steps(&self, d: usize) -> u64 {
        match *self {
            Budget::Steps(s) => s,
            Budget::PerDimension { per_dimension } => per_dimension * d as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub xref: ReferenceStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            xref: ReferenceStrategy::SelfGlobal,
            weights: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Linear,
    Izhikevich,
    Lif,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    /// Half-width of the uniform range for random matrix entries.
    #[serde(default = "two")]
    pub range: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 2]; 2]>,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            range: 2.0,
            stability: None,
            matrix: None,
        }
    }
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IzhikevichConfig {
    #[serde(default)]
    pub randomise: bool,
    #[serde(default = "izh_a")]
    pub a: f64,
    #[serde(default = "izh_b")]
    pub b: f64,
    #[serde(default = "izh_c")]
    pub c: f64,
    #[serde(default = "izh_d")]
    pub d: f64,
    #[serde(default = "izh_i")]
    pub i_syn: f64,
}

fn izh_a() -> f64 {
    IzhikevichModel::REGULAR_SPIKING.a
}
fn izh_b() -> f64 {
    IzhikevichModel::REGULAR_SPIKING.b
}
fn izh_c() -> f64 {
    IzhikevichModel::REGULAR_SPIKING.c
}
fn izh_d() -> f64 {
    IzhikevichModel::REGULAR_SPIKING.d
}
fn izh_i() -> f64 {
    IzhikevichModel::REGULAR_SPIKING.i_syn
}

impl Default for IzhikevichConfig {
    fn default() -> Self {
        let rs = IzhikevichModel::REGULAR_SPIKING;
        Self {
            randomise: false,
            a: rs.a,
            b: rs.b,
            c: rs.c,
            d: rs.d,
            i_syn: rs.i_syn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub linear: LinearConfig,
    #[serde(default)]
    pub izhikevich: IzhikevichConfig,
    #[serde(default)]
    pub lif: LifModel,
}

fn default_dt() -> f64 {
    0.01
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Linear,
            dt: default_dt(),
            integrator: Integrator::Rk4,
            linear: LinearConfig::default(),
            izhikevich: IzhikevichConfig::default(),
            lif: LifModel::default(),
        }
    }
}

impl DynamicsConfig {
    pub fn linear() -> Self {
        Self::default()
    }

    pub fn izhikevich() -> Self {
        Self {
            model: ModelKind::Izhikevich,
            ..Self::linear()
        }
    }

    fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NeuronModel, RunError> {
        Ok(match self.model {
            ModelKind::Linear => {
                let c = &self.linear;
                let m = if let Some(a) = c.matrix {
                    LinearModel::new(a)?
                } else if let Some(class) = c.stability {
                    LinearModel::with_stability(rng, class)
                } else {
                    if !(c.range > 0.0 && c.range.is_finite()) {
                        return Err(RunError::Config(format!("linear range must be positive, got {}", c.range)));
                    }
                    LinearModel::random(rng, c.range)
                };
                NeuronModel::Linear(m)
            }
            ModelKind::Izhikevich => {
                let c = &self.izhikevich;
                NeuronModel::Izhikevich(if c.randomise {
                    IzhikevichModel::random(rng, c.i_syn)
                } else {
                    IzhikevichModel::new(c.a, c.b, c.c, c.d, c.i_syn)?
                })
            }
            ModelKind::Lif => {
                let c = &self.lif;
                NeuronModel::Lif(LifModel::new(c.tau_m, c.v_rest, c.v_th, c.i_syn)?)
            }
        })
    }
}

/// Spike rule as written in a config; noise levels may be left to default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpikeRuleConfig {
    RandomReset,
    FixedReset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Directional {
        alpha_d: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default)]
        target: DirectionTarget,
    },
    DeCurrentToBest {
        #[serde(default = "default_f")]
        f: f64,
    },
    #[serde(alias = "de_rand_variant")]
    DeCurrentToRand {
        #[serde(default = "default_f")]
        f: f64,
    },
}

fn default_f() -> f64 {
    DEFAULT_F
}

impl SpikeRuleConfig {
    /// `sigma_default` is used wherever the config omits a noise level.
    pub fn resolve(&self, sigma_default: f64) -> SpikeRule {
        match *self {
            SpikeRuleConfig::RandomReset => SpikeRule::RandomReset,
            SpikeRuleConfig::FixedReset { sigma } => SpikeRule::FixedReset {
                sigma: sigma.unwrap_or(sigma_default),
            },
            SpikeRuleConfig::Directional { alpha_d, sigma, target } => SpikeRule::Directional {
                alpha_d,
                sigma: sigma.unwrap_or(sigma_default),
                target,
            },
            SpikeRuleConfig::DeCurrentToBest { f } => SpikeRule::DeCurrentToBest { f },
            SpikeRuleConfig::DeCurrentToRand { f } => SpikeRule::DeCurrentToRand { f },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeConfig {
    pub condition: SpikeCondition,
    pub threshold: ThresholdRule,
    pub rule: SpikeRuleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover: Option<BinomialCrossover>,
}

impl Default for SpikeConfig {
    fn default() -> Self {
        Self {
            condition: SpikeCondition::WeightedMinkowski {
                q: 2.0,
                weights: [1.0, 0.0],
            },
            threshold: ThresholdRule {
                kind: ThresholdKind::GlobalSelfGap,
                alpha_thr: 1.0,
            },
            rule: SpikeRuleConfig::DeCurrentToRand { f: DEFAULT_F },
            crossover: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Unit `i` takes entry `i mod k`.
    #[default]
    Alternate,
    /// The alternating multiset, shuffled with the seeded assignment stream.
    Random,
}

/// Mixed population: units draw their dynamics from `dynamics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub dynamics: Vec<DynamicsConfig>,
    #[serde(default)]
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(default)]
    pub spike: SpikeTopologyKind,
    #[serde(default)]
    pub info: InfoTopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            spike: SpikeTopologyKind::Ring,
            info: InfoTopologyKind::RandomM,
            m: Some(10),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub units: usize,
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: ExecutionMode,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub spike: SpikeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hybrid: Option<HybridConfig>,
    #[serde(default)]
    pub topology: TopologyConfig,
    /// Keep per-step neuron states of every unit in the trace.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub record_states: bool,
}

impl RunConfig {
    /// Linear cores with the DE/current-to-rand rule on a ring/random-m
    /// network.
    pub fn neuropt_lin(function: &str, dimension: usize, seed: u64) -> Self {
        Self {
            problem: ProblemConfig {
                function: function.to_string(),
                dimension,
                shift_seed: seed,
                lower: default_lower(),
                upper: default_upper(),
            },
            units: 30,
            budget: Budget::PerDimension { per_dimension: 1000 },
            seed,
            mode: ExecutionMode::Deterministic,
            transform: TransformConfig {
                alpha: 1.0,
                xref: ReferenceStrategy::SelfGlobal,
                weights: Some(vec![0.5, 0.5]),
            },
            dynamics: DynamicsConfig::linear(),
            spike: SpikeConfig::default(),
            hybrid: None,
            topology: TopologyConfig::default(),
            record_states: false,
        }
    }

    pub fn neuropt_izh(function: &str, dimension: usize, seed: u64) -> Self {
        Self {
            dynamics: DynamicsConfig::izhikevich(),
            ..Self::neuropt_lin(function, dimension, seed)
        }
    }

    /// Half linear, half Izhikevich.
    pub fn neuropt_hyb(function: &str, dimension: usize, seed: u64) -> Self {
        Self {
            hybrid: Some(HybridConfig {
                dynamics: vec![DynamicsConfig::linear(), DynamicsConfig::izhikevich()],
                assignment: Assignment::Alternate,
            }),
            ..Self::neuropt_lin(function, dimension, seed)
        }
    }

    pub fn steps(&self) -> u64 {
        self.budget.steps(self.problem.dimension)
    }

    /// Dynamics configuration used by each unit.
    fn unit_dynamics(&self) -> Result<Vec<&DynamicsConfig>, RunError> {
        let n = self.units;
        let Some(h) = &self.hybrid else {
            return Ok(vec![&self.dynamics; n]);
        };
        if h.dynamics.is_empty() {
            return Err(RunError::Config("hybrid.dynamics must not be empty".into()));
        }
        let mut idx: Vec<usize> = (0..n).map(|i| i % h.dynamics.len()).collect();
        if h.assignment == Assignment::Random {
            idx.shuffle(&mut stream(self.seed, 0, StreamRole::Assignment));
        }
        Ok(idx.into_iter().map(|k| &h.dynamics[k]).collect())
    }

    /// Validates the configuration and instantiates every unit.
    pub fn resolve(&self) -> Result<ResolvedRun, RunError> {
        let n = self.units;
        let d = self.problem.dimension;
        if n == 0 {
            return Err(RunError::Config("units must be at least 1".into()));
        }
        let steps = self.steps();
        if steps == 0 {
            return Err(RunError::Config("budget must be at least 1 step".into()));
        }
        let objective = make_benchmark(&self.problem.function, d, self.problem.shift_seed)?;
        let domain = SearchDomain::uniform(d, self.problem.lower, self.problem.upper)?;

        let spike_topology = match self.topology.spike {
            SpikeTopologyKind::Ring => build_ring(n)?,
            SpikeTopologyKind::Full => build_full(n)?,
        };
        let info_topology = match self.topology.info {
            InfoTopologyKind::Full => build_full_info(n)?,
            InfoTopologyKind::RandomM => {
                let m = self
                    .topology
                    .m
                    .ok_or_else(|| RunError::Config("topology.m is required for random_m".into()))?;
                build_random_info(n, m, &mut stream(self.seed, 0, StreamRole::Topology))?
            }
        };

        let spike = &self.spike;
        spike.condition.validate()?;
        spike.threshold.validate()?;
        if let Some(cr) = &spike.crossover {
            cr.validate()?;
        }
        let alpha = self.transform.alpha;
        let width = (self.problem.upper - self.problem.lower).abs();
        let rule = spike.rule.resolve(DEFAULT_SIGMA_FRACTION * width * alpha);
        rule.validate()?;

        let dynamics = self.unit_dynamics()?;
        let mut units = Vec::with_capacity(n);
        for (i, dyn_cfg) in dynamics.into_iter().enumerate() {
            if !(dyn_cfg.dt > 0.0 && dyn_cfg.dt.is_finite()) {
                return Err(RunError::Config(format!("dynamics.dt must be positive, got {}", dyn_cfg.dt)));
            }
            let model = dyn_cfg.instantiate(&mut stream(self.seed, i as u64, StreamRole::Model))?;
            if matches!(spike.condition, SpikeCondition::Disc { .. }) && model.trace().is_none() {
                return Err(RunError::Config(format!(
                    "the disc spiking condition needs a linear model, unit {i} is {}",
                    model.name()
                )));
            }
            let mut init = stream(self.seed, i as u64, StreamRole::Init);
            let x0 = domain.sample_uniform(&mut init);
            let noise: Vec<f64> = (0..d).map(|_| init.random::<f64>()).collect();
            let transform = TransformParams::new(alpha, noise, self.transform.xref, self.transform.weights.clone())?;
            let m = info_topology.m();
            let terms = self.transform.xref.term_count(m);
            if let Some(w) = &self.transform.weights {
                if w.len() != terms {
                    return Err(RunError::Config(format!(
                        "transform.weights has {} entries, the reference needs {terms}",
                        w.len()
                    )));
                }
            }
            units.push(UnitSetup {
                params: CoreParams {
                    model,
                    integrator: dyn_cfg.integrator,
                    dt: dyn_cfg.dt,
                    condition: spike.condition,
                    threshold: spike.threshold,
                    rule,
                    crossover: spike.crossover,
                },
                transform,
                x0,
            });
        }

        Ok(ResolvedRun {
            objective,
            domain,
            spike_topology,
            info_topology,
            units,
            steps,
            seed: self.seed,
            record_states: self.record_states,
        })
    }
}

/// Initial state and parameters of one unit.
#[derive(Debug, Clone)]
pub struct UnitSetup {
    pub params: CoreParams,
    pub transform: TransformParams,
    pub x0: Vec<f64>,
}

/// A validated configuration with every random choice made.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub objective: ObjectiveFunction,
    pub domain: SearchDomain,
    pub spike_topology: SpikeTopology,
    pub info_topology: InfoTopology,
    pub units: Vec<UnitSetup>,
    pub steps: u64,
    pub seed: u64,
    pub record_states: bool,
}
