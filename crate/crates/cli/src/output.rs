//! CSV and JSON writers.
//!
//! Reals are written with `{:e}`, the shortest representation that parses
//! back to the same `f64`, so equal runs give equal bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use neuropt_core::runtime::{PowerEstimate, RunConfig, RunTrace, ScalingReport};
use serde::{Deserialize, Serialize};

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_trace_csv(path: &Path, trace: &RunTrace) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "step,f_g,eps_f,spikes_total,wall_ms")?;
    for r in &trace.steps {
        writeln!(w, "{},{:e},{:e},{},{:e}", r.step, r.f_g, r.eps_f, r.spikes_total, r.wall_ms)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Step-by-unit spike counts.
pub fn write_spikes_csv(path: &Path, trace: &RunTrace) -> anyhow::Result<()> {
    let mut w = create(path)?;
    let n = trace.evaluations.len();
    write!(w, "step")?;
    for i in 0..n {
        write!(w, ",unit{i}")?;
    }
    writeln!(w)?;
    for (t, row) in trace.spike_counts.iter().enumerate() {
        write!(w, "{t}")?;
        for c in row {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// One row per unit, step and dimension of the recorded core snapshots.
pub fn write_states_csv(path: &Path, trace: &RunTrace) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "unit,step,dim,v1_pre,v2_pre,theta,spike,v1_post,v2_post,x")?;
    for (i, snaps) in trace.snapshots.iter().enumerate() {
        for s in snaps {
            for j in 0..s.x.len() {
                let (pre, post) = (s.v_pre[j].0, s.v_post[j].0);
                writeln!(
                    w,
                    "{i},{},{j},{:e},{:e},{:e},{},{:e},{:e},{:e}",
                    s.t, pre[0], pre[1], s.theta[j], s.s[j] as u8, post[0], post[1], s.x[j]
                )?;
            }
        }
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_scaling_csv(path: &Path, report: &ScalingReport) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "n,d,reps,mean_ms,std_ms,cv")?;
    for c in &report.cells {
        writeln!(w, "{},{},{},{:e},{:e},{:e}", c.n, c.d, c.samples_ms.len(), c.mean_ms, c.std_ms, c.cv)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub n: u64,
    pub d: u64,
    pub m: u64,
    pub dt_ms: f64,
    #[serde(flatten)]
    pub estimate: PowerEstimate,
}

/// What `summary.json` holds. Non-finite reals serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_error: Option<f64>,
    pub final_f_g: Option<f64>,
    pub optimum_value: f64,
    pub completed_steps: u64,
    pub budget_steps: u64,
    pub evaluations: u64,
    pub evaluations_per_unit: Vec<u64>,
    pub fallbacks: u64,
    pub best_position: Vec<f64>,
    pub abort: Option<String>,
    pub power: Option<PowerSummary>,
    pub config: RunConfig,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Summary {
    pub fn new(config: &RunConfig, trace: &RunTrace, power: Option<PowerSummary>) -> Self {
        Self {
            final_error: finite(trace.final_error()),
            final_f_g: finite(trace.final_f_g()),
            optimum_value: trace.optimum_value,
            completed_steps: trace.completed_steps(),
            budget_steps: config.steps(),
            evaluations: trace.total_evaluations(),
            evaluations_per_unit: trace.evaluations.clone(),
            fallbacks: trace.fallbacks,
            best_position: trace.best_position.clone(),
            abort: trace.abort.clone(),
            power,
            config: config.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn read_summary(path: &Path) -> anyhow::Result<Summary> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}
