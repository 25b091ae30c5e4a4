//! What a run leaves behind.

use serde::{Deserialize, Serialize};

use super::config::ExecutionMode;
use crate::unit::CoreSnapshot;

/// Timestamp increment of the deterministic mode's virtual clock, in ms.
pub const VIRTUAL_STEP_MS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub f_g: f64,
    pub eps_f: f64,
    pub spikes_total: u64,
    pub wall_ms: f64,
}

/// Per-step record of a run. Step 0 is the initial evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub mode: ExecutionMode,
    pub steps: Vec<StepRecord>,
    /// `unit_best[t][i]`: best fitness of unit `i` after step `t`.
    pub unit_best: Vec<Vec<f64>>,
    /// `spike_counts[t][i]`: spiking dimensions of unit `i` at step `t`.
    pub spike_counts: Vec<Vec<u32>>,
    /// Values emitted by the high-level selector, in emission order.
    pub selector_history: Vec<f64>,
    /// Objective evaluations per unit.
    pub evaluations: Vec<u64>,
    pub fallbacks: u64,
    /// `snapshots[i]`: per-step core snapshots of unit `i`, when recorded.
    pub snapshots: Vec<Vec<CoreSnapshot>>,
    /// Measured duration of each step in ms (deterministic mode).
    pub step_time_ms: Vec<f64>,
    pub best_position: Vec<f64>,
    pub optimum_value: f64,
    /// Diagnostic for a run that stopped before its budget.
    pub abort: Option<String>,
}

impl RunTrace {
    pub fn completed_steps(&self) -> u64 {
        self.steps.last().map_or(0, |r| r.step)
    }

    pub fn final_f_g(&self) -> f64 {
        self.steps.last().map_or(f64::INFINITY, |r| r.f_g)
    }

    pub fn final_error(&self) -> f64 {
        self.steps.last().map_or(f64::INFINITY, |r| r.eps_f)
    }

    pub fn total_evaluations(&self) -> u64 {
        self.evaluations.iter().sum()
    }

    /// Final absolute error of every unit's best.
    pub fn unit_errors(&self) -> Vec<f64> {
        self.unit_best
            .last()
            .map(|row| row.iter().map(|f| (f - self.optimum_value).abs()).collect())
            .unwrap_or_default()
    }

    /// Global and per-unit best sequences never increase.
    pub fn is_monotone(&self) -> bool {
        let global = self.steps.windows(2).all(|w| w[1].f_g <= w[0].f_g);
        let emitted = self.selector_history.windows(2).all(|w| w[1] <= w[0]);
        let units = self
            .unit_best
            .windows(2)
            .all(|w| w[1].iter().zip(&w[0]).all(|(b, a)| b <= a));
        global && emitted && units
    }
}

/// Builds step records from step-major matrices.
pub(super) fn step_records(
    unit_best: &[Vec<f64>],
    spike_counts: &[Vec<u32>],
    wall_ms: &[f64],
    optimum: f64,
) -> Vec<StepRecord> {
    unit_best
        .iter()
        .zip(spike_counts)
        .zip(wall_ms)
        .enumerate()
        .map(|(t, ((best, spikes), &wall))| {
            let f_g = best.iter().copied().fold(f64::INFINITY, f64::min);
            StepRecord {
                step: t as u64,
                f_g,
                eps_f: (f_g - optimum).abs(),
                spikes_total: spikes.iter().map(|&c| c as u64).sum(),
                wall_ms: wall,
            }
        })
        .collect()
}
