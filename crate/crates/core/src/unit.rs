//! The heuristic unit: spiking core, selector, spiking handler, sender and
//! receiver.
//!
//! Each process is a plain step function over its own state so that the
//! same code runs under the lock-step scheduler and as a free-running actor.

use ndarray::{Array2, ArrayView2, ArrayView3};
use thiserror::Error;

use crate::coordination::{CoordinationError, RowUpdate};
use crate::dynamics::{DynamicsError, Integrator, NeuroState, NeuronModel};
use crate::heuristics::{
    apply_spike_rule, phi, phi_s, threshold, BinomialCrossover, SpikeCondition, SpikeContext, SpikeRule,
    ThresholdRule,
};
use crate::problem::{ObjectiveFunction, ProblemError, SearchDomain};
use crate::seed::UnitRng;
use crate::transform::{ReferenceStrategy, TransformError, TransformParams};

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("unit {unit}, dimension {dim}: {source}")]
    Dynamics {
        unit: usize,
        dim: usize,
        source: DynamicsError,
    },
    #[error("unit {unit}: decoded position is not finite in dimension {dim}")]
    NonFinitePosition { unit: usize, dim: usize },
    #[error("unit {unit}: {source}")]
    Transform { unit: usize, source: TransformError },
    #[error("unit {unit}: {source}")]
    Problem { unit: usize, source: ProblemError },
    #[error("unit {unit}: {source}")]
    Shape { unit: usize, source: CoordinationError },
}

/// Heuristic configuration of one spiking core.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreParams {
    pub model: NeuronModel,
    pub integrator: Integrator,
    pub dt: f64,
    pub condition: SpikeCondition,
    pub threshold: ThresholdRule,
    pub rule: SpikeRule,
    pub crossover: Option<BinomialCrossover>,
}

/// State owned by a spiking core.
#[derive(Debug, Clone)]
pub struct SpikingCore {
    pub unit_id: usize,
    pub params: CoreParams,
    pub transform: TransformParams,
    /// Current position.
    pub x: Vec<f64>,
    /// Neuron states after the last update.
    pub neuro_states: Vec<NeuroState>,
    /// Local step counter, incremented at the start of each step.
    pub t: u64,
    pub rng: UnitRng,
}

impl SpikingCore {
    pub fn new(unit_id: usize, params: CoreParams, transform: TransformParams, x0: Vec<f64>, rng: UnitRng) -> Self {
        let d = x0.len();
        Self {
            unit_id,
            params,
            transform,
            x: x0,
            neuro_states: vec![NeuroState::ZERO; d],
            t: 0,
            rng,
        }
    }

    pub fn dimension(&self) -> usize {
        self.x.len()
    }
}

/// Inputs consumed by one core step.
#[derive(Debug, Clone, Copy)]
pub struct CoreInputs<'a> {
    pub a: &'a [bool],
    pub g: &'a [f64],
    pub f_g: f64,
    pub p: &'a [f64],
    pub f_p: f64,
    /// Neighbourhood best positions, `m x d`.
    pub p_n: ArrayView2<'a, f64>,
    pub f_pn: &'a [f64],
}

/// Values observed before the update, kept for replaying the spike signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSnapshot {
    pub t: u64,
    pub v_pre: Vec<NeuroState>,
    pub theta: Vec<f64>,
    pub s: Vec<bool>,
    pub v_post: Vec<NeuroState>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreOutput {
    pub s: Vec<bool>,
    pub x: Vec<f64>,
    /// Dimensions where a DE rule fell back to a fixed reset.
    pub fallbacks: u32,
    pub snapshot: Option<CoreSnapshot>,
}

/// One pass of the spiking core over every dimension.
pub fn spiking_core_step(
    core: &mut SpikingCore,
    inputs: &CoreInputs<'_>,
    domain: &SearchDomain,
    record: bool,
) -> Result<CoreOutput, UnitError> {
    let unit = core.unit_id;
    let d = core.dimension();
    let shape_err = |what: &'static str, expected: Vec<usize>, actual: Vec<usize>| UnitError::Shape {
        unit,
        source: CoordinationError::Shape { what, expected, actual },
    };
    if inputs.a.len() != d || inputs.g.len() != d || inputs.p.len() != d {
        return Err(shape_err(
            "core inputs",
            vec![d, d, d],
            vec![inputs.a.len(), inputs.g.len(), inputs.p.len()],
        ));
    }
    if inputs.p_n.ncols() != d {
        return Err(shape_err("neighbourhood", vec![inputs.p_n.nrows(), d], inputs.p_n.shape().to_vec()));
    }

    core.t += 1;
    let t = core.t;
    let neighbour_rows: Vec<Vec<f64>> = match core.transform.strategy() {
        ReferenceStrategy::SelfGlobal => Vec::new(),
        ReferenceStrategy::SelfGlobalNeighbour => inputs.p_n.rows().into_iter().map(|r| r.to_vec()).collect(),
    };
    let xref = core
        .transform
        .xref(inputs.p, inputs.g, &neighbour_rows)
        .map_err(|source| UnitError::Transform { unit, source })?;

    let params = &core.params;
    let model_trace = params.model.trace().unwrap_or(0.0);
    let mut s = vec![false; d];
    let mut x = vec![0.0; d];
    let mut fallbacks = 0;
    let mut snapshot = record.then(|| CoreSnapshot {
        t,
        v_pre: Vec::with_capacity(d),
        theta: Vec::with_capacity(d),
        s: Vec::new(),
        v_post: Vec::with_capacity(d),
        x: Vec::new(),
    });
    let mut neighbour_states = Vec::with_capacity(inputs.p_n.nrows());

    for j in 0..d {
        let v = core.transform.encode(j, core.x[j], xref[j]);
        let theta = threshold(&params.threshold, inputs.g[j], inputs.p[j], xref[j]);
        s[j] = phi_s(&params.condition, v, t, theta, model_trace);
        let next = if phi(&params.condition, v, t, theta, inputs.a[j], model_trace) {
            neighbour_states.clear();
            neighbour_states.extend(inputs.p_n.column(j).iter().map(|&pk| core.transform.encode(j, pk, xref[j])));
            let ctx = SpikeContext {
                self_best: core.transform.encode(j, inputs.p[j], xref[j]),
                global_best: core.transform.encode(j, inputs.g[j], xref[j]),
                neighbours: &neighbour_states,
            };
            let outcome = apply_spike_rule(&params.rule, v, &ctx, &mut core.rng);
            if outcome.fallback {
                fallbacks += 1;
            }
            match &params.crossover {
                Some(cr) => cr.apply(v, outcome.state, &mut core.rng),
                None => outcome.state,
            }
        } else {
            params
                .integrator
                .step(&params.model, v, params.dt)
                .map_err(|source| UnitError::Dynamics { unit, dim: j, source })?
        };
        let xj = core.transform.decode(next, xref[j]);
        if !xj.is_finite() {
            return Err(UnitError::NonFinitePosition { unit, dim: j });
        }
        x[j] = xj.clamp(domain.lower()[j], domain.upper()[j]);
        core.neuro_states[j] = next;
        if let Some(snap) = snapshot.as_mut() {
            snap.v_pre.push(v);
            snap.theta.push(theta);
            snap.v_post.push(next);
        }
    }
    core.x.clone_from(&x);
    if let Some(snap) = snapshot.as_mut() {
        snap.s.clone_from(&s);
        snap.x.clone_from(&x);
    }
    Ok(CoreOutput {
        s,
        x,
        fallbacks,
        snapshot,
    })
}

/// Greedy particular-best memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub unit_id: usize,
    pub p: Vec<f64>,
    pub f_p: f64,
    pub is_init: bool,
    pub evaluations: u64,
}

impl Selector {
    pub fn new(unit_id: usize, d: usize) -> Self {
        Self {
            unit_id,
            p: vec![0.0; d],
            f_p: f64::INFINITY,
            is_init: false,
            evaluations: 0,
        }
    }
}

/// Evaluates `x` and keeps it if strictly better (or if nothing is kept yet).
pub fn selector_step(sel: &mut Selector, x: &[f64], f: &ObjectiveFunction) -> Result<(Vec<f64>, f64), UnitError> {
    let f_x = f.evaluate(x).map_err(|source| UnitError::Problem {
        unit: sel.unit_id,
        source,
    })?;
    sel.evaluations += 1;
    if f_x < sel.f_p || !sel.is_init {
        sel.p = x.to_vec();
        sel.f_p = f_x;
        sel.is_init = true;
    }
    Ok((sel.p.clone(), sel.f_p))
}

/// Outbound half of the handler: the unit's row of `S`.
pub fn spike_row_update(unit_id: usize, s: &[bool]) -> RowUpdate<bool> {
    RowUpdate {
        unit: unit_id,
        row: s.to_vec(),
    }
}

/// Inbound half of the handler: row `unit_id` of `A`.
pub fn extract_activation(unit_id: usize, a: ArrayView2<'_, bool>) -> Result<Vec<bool>, UnitError> {
    if unit_id >= a.nrows() {
        return Err(UnitError::Shape {
            unit: unit_id,
            source: CoordinationError::RowOutOfRange {
                unit: unit_id,
                n: a.nrows(),
            },
        });
    }
    Ok(a.row(unit_id).to_vec())
}

pub fn spiking_handler_step(
    unit_id: usize,
    s: &[bool],
    a: ArrayView2<'_, bool>,
) -> Result<(RowUpdate<bool>, Vec<bool>), UnitError> {
    if a.ncols() != s.len() {
        return Err(UnitError::Shape {
            unit: unit_id,
            source: CoordinationError::Shape {
                what: "activation matrix",
                expected: vec![a.nrows(), s.len()],
                actual: a.shape().to_vec(),
            },
        });
    }
    Ok((spike_row_update(unit_id, s), extract_activation(unit_id, a)?))
}

pub fn sender_step(unit_id: usize, p: &[f64], f_p: f64) -> (RowUpdate<f64>, (usize, f64)) {
    (
        RowUpdate {
            unit: unit_id,
            row: p.to_vec(),
        },
        (unit_id, f_p),
    )
}

/// Slice `[:, :, unit_id]` of the neighbourhood tensor and column
/// `unit_id` of the fitness matrix.
pub fn receiver_step(
    unit_id: usize,
    pn: ArrayView3<'_, f64>,
    fnm: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Vec<f64>), UnitError> {
    let (m, d, n) = pn.dim();
    if unit_id >= n || fnm.dim() != (m, n) {
        return Err(UnitError::Shape {
            unit: unit_id,
            source: CoordinationError::Shape {
                what: "neighbourhood tensor",
                expected: vec![m, d, n, m, n],
                actual: vec![m, d, n, fnm.nrows(), fnm.ncols()],
            },
        });
    }
    let slice = pn.index_axis(ndarray::Axis(2), unit_id).to_owned();
    Ok((slice, fnm.column(unit_id).to_vec()))
}
