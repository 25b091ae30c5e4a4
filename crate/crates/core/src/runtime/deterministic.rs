//! Single-threaded lock-step scheduler.
//!
//! Step 0 evaluates the initial positions and runs one round of
//! coordination with no spikes. Each later step runs, in this order and in
//! ascending unit order within each stage: cores, handlers (spike rows),
//! the spike collector and tensor contraction (activations for the next
//! step), selectors, senders, the best collector, the high-level selector,
//! the neighbour manager and the receivers.

use std::time::Instant;

use ndarray::Array2;

use super::config::{ExecutionMode, ResolvedRun};
use super::trace::{step_records, RunTrace, VIRTUAL_STEP_MS};
use crate::coordination::{
    high_level_selector_step, neighbour_manager_step, tensor_contract, BestCollector, GlobalBest, InfoTopology,
    RowCollector,
};
use crate::seed::{stream, StreamRole};
use crate::unit::{
    extract_activation, receiver_step, selector_step, sender_step, spike_row_update, spiking_core_step, CoreInputs,
    CoreSnapshot, Selector, SpikingCore, UnitError,
};

/// Neighbourhood data delivered to each unit.
type Received = Vec<(Array2<f64>, Vec<f64>)>;

struct Coordination {
    best: BestCollector,
    global: GlobalBest,
    g: Vec<f64>,
    f_g: f64,
}

impl Coordination {
    /// High-level selector, neighbour manager and receivers.
    fn run(&mut self, info: &InfoTopology) -> Result<Received, String> {
        let p = self.best.positions();
        let f = self.best.fitness();
        let (g, f_g) = high_level_selector_step(&mut self.global, p.view(), f.view()).map_err(|e| e.to_string())?;
        self.g = g;
        self.f_g = f_g;
        let (pn, fnm) = neighbour_manager_step(info, p.view(), f.view()).map_err(|e| e.to_string())?;
        (0..info.size())
            .map(|i| receiver_step(i, pn.view(), fnm.view()).map_err(|e| e.to_string()))
            .collect()
    }
}

pub(super) fn run(r: ResolvedRun) -> RunTrace {
    let n = r.units.len();
    let d = r.domain.dimension();
    let objective = r.objective.fresh_counter();
    let optimum = objective.optimum_value().unwrap_or(0.0);

    let mut cores: Vec<SpikingCore> = r
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| {
            SpikingCore::new(
                i,
                u.params.clone(),
                u.transform.clone(),
                u.x0.clone(),
                stream(r.seed, i as u64, StreamRole::Core),
            )
        })
        .collect();
    let mut selectors: Vec<Selector> = (0..n).map(|i| Selector::new(i, d)).collect();
    let mut spikes = RowCollector::new(n, d, false);
    let mut coord = Coordination {
        best: BestCollector::new(n, d),
        global: GlobalBest::new(d),
        g: vec![0.0; d],
        f_g: f64::INFINITY,
    };
    let mut activations = vec![vec![false; d]; n];

    let mut unit_best: Vec<Vec<f64>> = Vec::with_capacity(r.steps as usize + 1);
    let mut spike_counts: Vec<Vec<u32>> = Vec::with_capacity(r.steps as usize + 1);
    let mut selector_history = Vec::with_capacity(r.steps as usize + 1);
    let mut step_time_ms = Vec::with_capacity(r.steps as usize + 1);
    let mut snapshots: Vec<Vec<CoreSnapshot>> = vec![Vec::new(); n];
    let mut fallbacks = 0u64;
    let mut abort = None;

    let started = Instant::now();
    let bootstrap = (|| -> Result<Received, String> {
        for (i, sel) in selectors.iter_mut().enumerate() {
            let (p, f_p) = selector_step(sel, &cores[i].x, &objective).map_err(|e| e.to_string())?;
            let (row, fit) = sender_step(i, &p, f_p);
            coord.best.apply(&row, fit).map_err(|e| e.to_string())?;
        }
        coord.run(&r.info_topology)
    })();
    let mut received = match bootstrap {
        Ok(rx) => {
            unit_best.push(selectors.iter().map(|s| s.f_p).collect());
            spike_counts.push(vec![0; n]);
            selector_history.push(coord.f_g);
            step_time_ms.push(started.elapsed().as_secs_f64() * 1e3);
            Some(rx)
        }
        Err(e) => {
            abort = Some(format!("bootstrap failed: {e}"));
            None
        }
    };

    if let Some(rx) = received.as_mut() {
        for t in 1..=r.steps {
            let step_start = Instant::now();
            let outcome = (|| -> Result<Vec<u32>, String> {
                let mut xs = Vec::with_capacity(n);
                let mut counts = Vec::with_capacity(n);
                for (i, core) in cores.iter_mut().enumerate() {
                    let sel = &selectors[i];
                    let inputs = CoreInputs {
                        a: &activations[i],
                        g: &coord.g,
                        f_g: coord.f_g,
                        p: &sel.p,
                        f_p: sel.f_p,
                        p_n: rx[i].0.view(),
                        f_pn: &rx[i].1,
                    };
                    let out = spiking_core_step(core, &inputs, &r.domain, r.record_states)
                        .map_err(|e: UnitError| format!("step {t}: {e}"))?;
                    fallbacks += out.fallbacks as u64;
                    counts.push(out.s.iter().filter(|&&s| s).count() as u32);
                    spikes.apply(&spike_row_update(i, &out.s)).map_err(|e| e.to_string())?;
                    if let Some(snap) = out.snapshot {
                        snapshots[i].push(snap);
                    }
                    xs.push(out.x);
                }
                let a = tensor_contract(&r.spike_topology, spikes.matrix().view()).map_err(|e| e.to_string())?;
                for (i, act) in activations.iter_mut().enumerate() {
                    *act = extract_activation(i, a.view()).map_err(|e| e.to_string())?;
                }
                for (i, sel) in selectors.iter_mut().enumerate() {
                    let (p, f_p) = selector_step(sel, &xs[i], &objective).map_err(|e| format!("step {t}: {e}"))?;
                    let (row, fit) = sender_step(i, &p, f_p);
                    coord.best.apply(&row, fit).map_err(|e| e.to_string())?;
                }
                *rx = coord.run(&r.info_topology)?;
                Ok(counts)
            })();
            match outcome {
                Ok(counts) => {
                    unit_best.push(selectors.iter().map(|s| s.f_p).collect());
                    spike_counts.push(counts);
                    selector_history.push(coord.f_g);
                    step_time_ms.push(step_start.elapsed().as_secs_f64() * 1e3);
                }
                Err(e) => {
                    log::error!("run aborted: {e}");
                    abort = Some(e);
                    break;
                }
            }
        }
    }

    let wall: Vec<f64> = (0..unit_best.len()).map(|t| t as f64 * VIRTUAL_STEP_MS).collect();
    let steps = step_records(&unit_best, &spike_counts, &wall, optimum);
    if fallbacks > 0 {
        log::warn!("{fallbacks} spike events fell back to a fixed reset for lack of neighbours");
    }
    RunTrace {
        mode: ExecutionMode::Deterministic,
        steps,
        unit_best,
        spike_counts,
        selector_history,
        evaluations: selectors.iter().map(|s| s.evaluations).collect(),
        fallbacks,
        snapshots,
        step_time_ms,
        best_position: coord.g,
        optimum_value: optimum,
        abort,
    }
}
