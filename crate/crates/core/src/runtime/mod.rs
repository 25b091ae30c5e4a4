//! Execution of a configured population.
//!
//! Two modes share the same step functions. The deterministic mode sweeps
//! every process once per step in a fixed order on one thread. The
//! concurrent mode gives each process its own thread and lets them talk
//! through latest-wins mailboxes.

mod channel;
mod concurrent;
pub mod config;
mod deterministic;
pub mod energy;
pub mod scaling;
pub mod trace;

use thiserror::Error;

pub use channel::{Inbox, Outbox};
pub use config::{
    Assignment, Budget, DynamicsConfig, ExecutionMode, HybridConfig, IzhikevichConfig, LinearConfig, ModelKind,
    ProblemConfig, ResolvedRun, RunConfig, SpikeConfig, SpikeRuleConfig, TopologyConfig, TransformConfig,
    UnitSetup,
};
pub use energy::{estimate_power, EnergyError, PowerEstimate};
pub use scaling::{measure_scaling, LinearFit, ScalingCell, ScalingReport, SCALING_REPS};
pub use trace::{RunTrace, StepRecord, VIRTUAL_STEP_MS};

/// A configuration that cannot be run.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
}

macro_rules! config_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Config(e.to_string())
            }
        }
    )*};
}

config_error_from!(
    crate::problem::ProblemError,
    crate::transform::TransformError,
    crate::dynamics::DynamicsError,
    crate::heuristics::HeuristicError,
    crate::coordination::CoordinationError
);

/// Runs `config` in its configured mode.
///
/// Configuration problems are returned as errors; a run that starts but
/// cannot finish returns a partial trace with [`RunTrace::abort`] set.
pub fn run(config: &RunConfig) -> Result<RunTrace, RunError> {
    let resolved = config.resolve()?;
    Ok(run_resolved(resolved, config.mode))
}

pub fn run_resolved(resolved: ResolvedRun, mode: ExecutionMode) -> RunTrace {
    match mode {
        ExecutionMode::Deterministic => deterministic::run(resolved),
        ExecutionMode::Concurrent => concurrent::run(resolved),
    }
}
