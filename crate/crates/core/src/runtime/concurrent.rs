//! Free-running mode: one thread per process.
//!
//! A core steps whenever its selector hands back a fresh best and uses
//! whatever activation, global best and neighbourhood arrived most recently
//! (its own best stands in for inputs that have not arrived yet). Every
//! other process is driven by its primary input. Cores stop after their
//! budget; the resulting closures of their outboxes cascade through the
//! graph until every thread has returned.

use std::any::Any;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use ndarray::{Array1, Array2, Array3};

use super::channel::{Inbox, Outbox};
use super::config::{ExecutionMode, ResolvedRun};
use super::trace::{step_records, RunTrace};
use crate::coordination::{
    high_level_selector_step, neighbour_manager_step, tensor_contract, BestCollector, GlobalBest, RowCollector,
    RowUpdate,
};
use crate::problem::ObjectiveFunction;
use crate::seed::{stream, StreamRole};
use crate::unit::{
    extract_activation, receiver_step, selector_step, sender_step, spike_row_update, spiking_core_step, CoreInputs,
    CoreSnapshot, Selector, SpikingCore,
};

const CORE_BEST: usize = 0;
const CORE_GLOBAL: usize = 1;
const CORE_ACTIVATION: usize = 2;
const CORE_NEIGHBOURS: usize = 3;

const HANDLER_SPIKES: usize = 0;
const HANDLER_ACTIVATION: usize = 1;

enum CoreMsg {
    Best(Vec<f64>, f64),
    Global(Arc<(Vec<f64>, f64)>),
    Activation(Vec<bool>),
    Neighbours(Array2<f64>, Vec<f64>),
}

enum HandlerMsg {
    Spikes(Vec<bool>),
    Activation(Arc<Array2<bool>>),
}

type BestMsg = (RowUpdate<f64>, (usize, f64));
type Population = Arc<(Array2<f64>, Array1<f64>)>;
type Neighbourhood = Arc<(Array3<f64>, Array2<f64>)>;

#[derive(Default)]
struct CoreLog {
    spikes: Vec<u32>,
    wall_ms: Vec<f64>,
    fallbacks: u64,
    snapshots: Vec<CoreSnapshot>,
    error: Option<String>,
}

#[derive(Default)]
struct SelectorLog {
    best: Vec<f64>,
    evaluations: u64,
    error: Option<String>,
}

#[derive(Default)]
struct GlobalLog {
    history: Vec<f64>,
    g: Vec<f64>,
}

struct CoreActor {
    core: SpikingCore,
    inbox: Inbox<CoreMsg>,
    to_selector: Outbox<Vec<f64>>,
    to_handler: Outbox<HandlerMsg>,
    steps: u64,
    m: usize,
    record: bool,
}

impl CoreActor {
    fn run(mut self, domain: &crate::problem::SearchDomain, start: Instant) -> CoreLog {
        let d = self.core.dimension();
        let mut log = CoreLog::default();
        self.to_selector.send(self.core.x.clone());
        self.to_handler.send(HandlerMsg::Spikes(vec![false; d]));
        log.spikes.push(0);
        log.wall_ms.push(start.elapsed().as_secs_f64() * 1e3);

        let mut global: Option<Arc<(Vec<f64>, f64)>> = None;
        let mut activation = vec![false; d];
        let mut neighbours: Option<(Array2<f64>, Vec<f64>)> = None;
        for t in 1..=self.steps {
            let Some(CoreMsg::Best(p, f_p)) = self.inbox.recv_slot(CORE_BEST) else {
                log.error = Some(format!("unit {}: selector stopped before step {t}", self.core.unit_id));
                break;
            };
            if let Some(CoreMsg::Global(g)) = self.inbox.try_take(CORE_GLOBAL) {
                global = Some(g);
            }
            if let Some(CoreMsg::Activation(a)) = self.inbox.try_take(CORE_ACTIVATION) {
                activation = a;
            }
            if let Some(CoreMsg::Neighbours(pn, fpn)) = self.inbox.try_take(CORE_NEIGHBOURS) {
                neighbours = Some((pn, fpn));
            }
            let (g, f_g) = match &global {
                Some(g) => (g.0.as_slice(), g.1),
                None => (p.as_slice(), f_p),
            };
            let padded;
            let (pn, fpn) = match &neighbours {
                Some((pn, fpn)) => (pn.view(), fpn.as_slice()),
                None => {
                    padded = (Array2::from_shape_fn((self.m, d), |(_, j)| p[j]), vec![f_p; self.m]);
                    (padded.0.view(), padded.1.as_slice())
                }
            };
            let inputs = CoreInputs {
                a: &activation,
                g,
                f_g,
                p: &p,
                f_p,
                p_n: pn,
                f_pn: fpn,
            };
            match spiking_core_step(&mut self.core, &inputs, domain, self.record) {
                Ok(out) => {
                    log.fallbacks += out.fallbacks as u64;
                    log.spikes.push(out.s.iter().filter(|&&s| s).count() as u32);
                    log.wall_ms.push(start.elapsed().as_secs_f64() * 1e3);
                    if let Some(snap) = out.snapshot {
                        log.snapshots.push(snap);
                    }
                    self.to_selector.send(out.x);
                    self.to_handler.send(HandlerMsg::Spikes(out.s));
                }
                Err(e) => {
                    log.error = Some(format!("step {t}: {e}"));
                    break;
                }
            }
        }
        log
    }
}

fn selector_actor(
    mut sel: Selector,
    mut inbox: Inbox<Vec<f64>>,
    objective: &ObjectiveFunction,
    to_core: Outbox<CoreMsg>,
    to_sender: Outbox<(Vec<f64>, f64)>,
) -> SelectorLog {
    let mut log = SelectorLog::default();
    while let Some((_, x)) = inbox.recv_any() {
        match selector_step(&mut sel, &x, objective) {
            Ok((p, f_p)) => {
                log.best.push(f_p);
                to_sender.send((p.clone(), f_p));
                to_core.send(CoreMsg::Best(p, f_p));
            }
            Err(e) => {
                log.error = Some(e.to_string());
                break;
            }
        }
    }
    log.evaluations = sel.evaluations;
    log
}

fn handler_actor(
    unit: usize,
    mut inbox: Inbox<HandlerMsg>,
    to_collector: Outbox<RowUpdate<bool>>,
    to_core: Outbox<CoreMsg>,
) -> Result<(), String> {
    while let Some((_, msg)) = inbox.recv_any() {
        match msg {
            HandlerMsg::Spikes(s) => {
                to_collector.send(spike_row_update(unit, &s));
            }
            HandlerMsg::Activation(a) => {
                let row = extract_activation(unit, a.view()).map_err(|e| e.to_string())?;
                to_core.send(CoreMsg::Activation(row));
            }
        }
    }
    Ok(())
}

fn sender_actor(unit: usize, mut inbox: Inbox<(Vec<f64>, f64)>, to_collector: Outbox<BestMsg>) {
    while let Some((_, (p, f_p))) = inbox.recv_any() {
        to_collector.send(sender_step(unit, &p, f_p));
    }
}

fn receiver_actor(unit: usize, mut inbox: Inbox<Neighbourhood>, to_core: Outbox<CoreMsg>) -> Result<(), String> {
    while let Some((_, nb)) = inbox.recv_any() {
        let (pn, fpn) = receiver_step(unit, nb.0.view(), nb.1.view()).map_err(|e| e.to_string())?;
        to_core.send(CoreMsg::Neighbours(pn, fpn));
    }
    Ok(())
}

fn spike_collector_actor(
    mut inbox: Inbox<RowUpdate<bool>>,
    n: usize,
    d: usize,
    to_tcl: Outbox<Arc<Array2<bool>>>,
) -> Result<(), String> {
    let mut s = RowCollector::new(n, d, false);
    while let Some((_, update)) = inbox.recv_any() {
        s.apply(&update).map_err(|e| e.to_string())?;
        to_tcl.send(Arc::new(s.matrix().clone()));
    }
    Ok(())
}

fn contraction_actor(
    mut inbox: Inbox<Arc<Array2<bool>>>,
    topology: &crate::coordination::SpikeTopology,
    to_handlers: Vec<Outbox<HandlerMsg>>,
) -> Result<(), String> {
    while let Some((_, s)) = inbox.recv_any() {
        let a = Arc::new(tensor_contract(topology, s.view()).map_err(|e| e.to_string())?);
        for h in &to_handlers {
            h.send(HandlerMsg::Activation(Arc::clone(&a)));
        }
    }
    Ok(())
}

/// Holds its output back until every unit has reported once.
fn best_collector_actor(
    mut inbox: Inbox<BestMsg>,
    n: usize,
    d: usize,
    to_global: Outbox<Population>,
    to_neighbours: Outbox<Population>,
) -> Result<(), String> {
    let mut best = BestCollector::new(n, d);
    while let Some((_, (row, fit))) = inbox.recv_any() {
        best.apply(&row, fit).map_err(|e| e.to_string())?;
        if best.is_complete() {
            let snapshot = Arc::new((best.positions().clone(), best.fitness().clone()));
            to_global.send(Arc::clone(&snapshot));
            to_neighbours.send(snapshot);
        }
    }
    Ok(())
}

fn global_actor(mut inbox: Inbox<Population>, d: usize, to_cores: Vec<Outbox<CoreMsg>>) -> Result<GlobalLog, String> {
    let mut state = GlobalBest::new(d);
    let mut log = GlobalLog::default();
    while let Some((_, pop)) = inbox.recv_any() {
        let (g, f_g) = high_level_selector_step(&mut state, pop.0.view(), pop.1.view()).map_err(|e| e.to_string())?;
        log.history.push(f_g);
        let msg = Arc::new((g, f_g));
        for c in &to_cores {
            c.send(CoreMsg::Global(Arc::clone(&msg)));
        }
    }
    log.g = state.g;
    Ok(log)
}

fn neighbour_actor(
    mut inbox: Inbox<Population>,
    topology: &crate::coordination::InfoTopology,
    to_receivers: Vec<Outbox<Neighbourhood>>,
) -> Result<(), String> {
    while let Some((_, pop)) = inbox.recv_any() {
        let nb = Arc::new(neighbour_manager_step(topology, pop.0.view(), pop.1.view()).map_err(|e| e.to_string())?);
        for r in &to_receivers {
            r.send(Arc::clone(&nb));
        }
    }
    Ok(())
}

fn panic_message(payload: Box<dyn Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".to_string()
    }
}

fn join<T>(name: String, h: thread::ScopedJoinHandle<'_, T>, problems: &mut Vec<String>) -> Option<T> {
    match h.join() {
        Ok(v) => Some(v),
        Err(p) => {
            problems.push(format!("{name} panicked: {}", panic_message(p)));
            None
        }
    }
}

pub(super) fn run(r: ResolvedRun) -> RunTrace {
    let n = r.units.len();
    let d = r.domain.dimension();
    let m = r.info_topology.m();
    let objective = r.objective.fresh_counter();
    let optimum = objective.optimum_value().unwrap_or(0.0);

    let core_inboxes: Vec<Inbox<CoreMsg>> = (0..n).map(|_| Inbox::new(4).with_primary(vec![CORE_BEST])).collect();
    let selector_inboxes: Vec<Inbox<Vec<f64>>> = (0..n).map(|_| Inbox::new(1)).collect();
    let handler_inboxes: Vec<Inbox<HandlerMsg>> =
        (0..n).map(|_| Inbox::new(2).with_primary(vec![HANDLER_SPIKES])).collect();
    let sender_inboxes: Vec<Inbox<(Vec<f64>, f64)>> = (0..n).map(|_| Inbox::new(1)).collect();
    let receiver_inboxes: Vec<Inbox<Neighbourhood>> = (0..n).map(|_| Inbox::new(1)).collect();
    let spike_inbox: Inbox<RowUpdate<bool>> = Inbox::new(n);
    let tcl_inbox: Inbox<Arc<Array2<bool>>> = Inbox::new(1);
    let best_inbox: Inbox<BestMsg> = Inbox::new(n);
    let global_inbox: Inbox<Population> = Inbox::new(1);
    let neighbour_inbox: Inbox<Population> = Inbox::new(1);

    // every outbox exists before any inbox moves into its thread
    let selector_to_core: Vec<_> = core_inboxes.iter().map(|c| c.outbox(CORE_BEST)).collect();
    let global_to_cores: Vec<_> = core_inboxes.iter().map(|c| c.outbox(CORE_GLOBAL)).collect();
    let handler_to_core: Vec<_> = core_inboxes.iter().map(|c| c.outbox(CORE_ACTIVATION)).collect();
    let receiver_to_core: Vec<_> = core_inboxes.iter().map(|c| c.outbox(CORE_NEIGHBOURS)).collect();
    let core_to_selector: Vec<_> = selector_inboxes.iter().map(|c| c.outbox(0)).collect();
    let core_to_handler: Vec<_> = handler_inboxes.iter().map(|h| h.outbox(HANDLER_SPIKES)).collect();
    let tcl_to_handlers: Vec<_> = handler_inboxes.iter().map(|h| h.outbox(HANDLER_ACTIVATION)).collect();
    let selector_to_sender: Vec<_> = sender_inboxes.iter().map(|c| c.outbox(0)).collect();
    let neighbours_to_receivers: Vec<_> = receiver_inboxes.iter().map(|c| c.outbox(0)).collect();
    let handler_to_spikes: Vec<_> = (0..n).map(|i| spike_inbox.outbox(i)).collect();
    let sender_to_best: Vec<_> = (0..n).map(|i| best_inbox.outbox(i)).collect();
    let spikes_to_tcl = tcl_inbox.outbox(0);
    let best_to_global = global_inbox.outbox(0);
    let best_to_neighbours = neighbour_inbox.outbox(0);

    let mut problems = Vec::new();
    let start = Instant::now();
    let (core_logs, selector_logs, global_log) = thread::scope(|s| {
        let domain = &r.domain;
        let objective = &objective;
        let spike_topology = &r.spike_topology;
        let info_topology = &r.info_topology;

        let mut cores = Vec::with_capacity(n);
        for (((i, u), inbox), (to_selector, to_handler)) in r
            .units
            .iter()
            .enumerate()
            .zip(core_inboxes)
            .zip(core_to_selector.into_iter().zip(core_to_handler))
        {
            let actor = CoreActor {
                core: SpikingCore::new(
                    i,
                    u.params.clone(),
                    u.transform.clone(),
                    u.x0.clone(),
                    stream(r.seed, i as u64, StreamRole::Core),
                ),
                inbox,
                to_selector,
                to_handler,
                steps: r.steps,
                m,
                record: r.record_states,
            };
            cores.push(s.spawn(move || actor.run(domain, start)));
        }
        let mut selectors = Vec::with_capacity(n);
        for (i, ((inbox, to_core), to_sender)) in
            selector_inboxes.into_iter().zip(selector_to_core).zip(selector_to_sender).enumerate()
        {
            let sel = Selector::new(i, d);
            selectors.push(s.spawn(move || selector_actor(sel, inbox, objective, to_core, to_sender)));
        }
        let mut others: Vec<(String, thread::ScopedJoinHandle<'_, Result<(), String>>)> = Vec::new();
        for (i, ((inbox, to_spikes), to_core)) in
            handler_inboxes.into_iter().zip(handler_to_spikes).zip(handler_to_core).enumerate()
        {
            others.push((format!("handler {i}"), s.spawn(move || handler_actor(i, inbox, to_spikes, to_core))));
        }
        for (i, (inbox, to_best)) in sender_inboxes.into_iter().zip(sender_to_best).enumerate() {
            others.push((
                format!("sender {i}"),
                s.spawn(move || {
                    sender_actor(i, inbox, to_best);
                    Ok(())
                }),
            ));
        }
        for (i, (inbox, to_core)) in receiver_inboxes.into_iter().zip(receiver_to_core).enumerate() {
            others.push((format!("receiver {i}"), s.spawn(move || receiver_actor(i, inbox, to_core))));
        }
        others.push((
            "spike collector".into(),
            s.spawn(move || spike_collector_actor(spike_inbox, n, d, spikes_to_tcl)),
        ));
        others.push((
            "tensor contraction".into(),
            s.spawn(move || contraction_actor(tcl_inbox, spike_topology, tcl_to_handlers)),
        ));
        others.push((
            "best collector".into(),
            s.spawn(move || best_collector_actor(best_inbox, n, d, best_to_global, best_to_neighbours)),
        ));
        others.push((
            "neighbour manager".into(),
            s.spawn(move || neighbour_actor(neighbour_inbox, info_topology, neighbours_to_receivers)),
        ));
        let global = s.spawn(move || global_actor(global_inbox, d, global_to_cores));

        let core_logs: Vec<CoreLog> = cores
            .into_iter()
            .enumerate()
            .map(|(i, h)| {
                join(format!("core {i}"), h, &mut problems).unwrap_or_else(|| CoreLog {
                    error: Some("panicked".into()),
                    ..CoreLog::default()
                })
            })
            .collect();
        let selector_logs: Vec<SelectorLog> = selectors
            .into_iter()
            .enumerate()
            .map(|(i, h)| join(format!("selector {i}"), h, &mut problems).unwrap_or_default())
            .collect();
        for (name, h) in others {
            if let Some(Err(e)) = join(name.clone(), h, &mut problems) {
                problems.push(format!("{name}: {e}"));
            }
        }
        let global_log = match join("high-level selector".into(), global, &mut problems) {
            Some(Ok(log)) => log,
            Some(Err(e)) => {
                problems.push(format!("high-level selector: {e}"));
                GlobalLog::default()
            }
            None => GlobalLog::default(),
        };
        (core_logs, selector_logs, global_log)
    });

    for (i, log) in core_logs.iter().enumerate() {
        if let Some(e) = &log.error {
            problems.push(format!("core {i}: {e}"));
        }
    }
    for (i, log) in selector_logs.iter().enumerate() {
        if let Some(e) = &log.error {
            problems.push(format!("selector {i}: {e}"));
        }
    }

    // logical step t of the population is the t-th local step of every unit
    let len = core_logs
        .iter()
        .map(|c| c.spikes.len())
        .chain(selector_logs.iter().map(|s| s.best.len()))
        .min()
        .unwrap_or(0);
    if len < r.steps as usize + 1 && problems.is_empty() {
        problems.push(format!("only {} of {} steps completed", len.saturating_sub(1), r.steps));
    }
    let unit_best: Vec<Vec<f64>> = (0..len).map(|t| selector_logs.iter().map(|s| s.best[t]).collect()).collect();
    let spike_counts: Vec<Vec<u32>> = (0..len).map(|t| core_logs.iter().map(|c| c.spikes[t]).collect()).collect();
    let wall: Vec<f64> = (0..len)
        .map(|t| core_logs.iter().map(|c| c.wall_ms[t]).fold(0.0, f64::max))
        .collect();
    let steps = step_records(&unit_best, &spike_counts, &wall, optimum);
    let fallbacks = core_logs.iter().map(|c| c.fallbacks).sum();
    if fallbacks > 0 {
        log::warn!("{fallbacks} spike events fell back to a fixed reset for lack of neighbours");
    }
    let abort = if problems.is_empty() {
        None
    } else {
        let msg = problems.join("; ");
        log::error!("run aborted: {msg}");
        Some(msg)
    };
    let step_time_ms = wall.windows(2).map(|w| w[1] - w[0]).collect();

    RunTrace {
        mode: ExecutionMode::Concurrent,
        steps,
        unit_best,
        spike_counts,
        selector_history: global_log.history,
        evaluations: selector_logs.iter().map(|s| s.evaluations).collect(),
        fallbacks,
        snapshots: core_logs.into_iter().map(|c| c.snapshots).collect(),
        step_time_ms,
        best_position: global_log.g,
        optimum_value: optimum,
        abort,
    }
}
