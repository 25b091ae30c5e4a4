//! Subcommand bodies.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use neuropt_core::runtime::{
    estimate_power, measure_scaling, run_resolved, ExecutionMode, PowerEstimate, RunConfig, RunTrace, ScalingReport,
    VIRTUAL_STEP_MS,
};

use crate::experiment::{ExperimentSpec, Logging, ScaleSpec};
use crate::output::{
    write_json, write_scaling_csv, write_spikes_csv, write_states_csv, write_trace_csv, PowerSummary, Summary,
};
use crate::CliError;

fn power_summary(n: usize, d: usize, m: usize) -> Option<PowerSummary> {
    let (n, d, m) = (n as u64, d as u64, m as u64);
    estimate_power(n, d, m, VIRTUAL_STEP_MS * 1e-3).ok().map(|estimate| PowerSummary {
        n,
        d,
        m,
        dt_ms: VIRTUAL_STEP_MS,
        estimate,
    })
}

/// Runs `config` and writes its outputs into `out`.
///
/// Outputs are written even when the run aborts; the abort is then
/// returned as an error.
pub fn execute(config: &RunConfig, out: &Path, logging: Logging) -> Result<RunTrace, CliError> {
    let resolved = config.resolve()?;
    let power = power_summary(resolved.units.len(), resolved.domain.dimension(), resolved.info_topology.m());
    log::info!(
        "{} d={} n={} seed={} for {} steps",
        config.problem.function,
        config.problem.dimension,
        config.units,
        config.seed,
        resolved.steps
    );
    let trace = run_resolved(resolved, config.mode);

    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    if logging != Logging::Summary {
        write_trace_csv(&out.join("trace.csv"), &trace)?;
        write_spikes_csv(&out.join("spikes.csv"), &trace)?;
    }
    if logging == Logging::FullState || config.record_states {
        write_states_csv(&out.join("states.csv"), &trace)?;
    }
    write_json(&out.join("summary.json"), &Summary::new(config, &trace, power))?;

    match &trace.abort {
        Some(msg) => Err(CliError::Abort(msg.clone())),
        None => {
            log::info!("final error {:e} after {} evaluations", trace.final_error(), trace.total_evaluations());
            Ok(trace)
        }
    }
}

pub fn run(config: &RunConfig, out: &Path) -> Result<RunTrace, CliError> {
    execute(config, out, Logging::Trace)
}

/// Runs every cell of a sweep. Aborted cells are reported and the sweep
/// carries on; the first abort is returned at the end.
pub fn sweep(spec: &ExperimentSpec) -> Result<usize, CliError> {
    let runs = spec.expand()?;
    std::fs::create_dir_all(&spec.out).with_context(|| format!("cannot create {}", spec.out.display()))?;
    let index_path = spec.out.join("sweep.csv");
    let mut index = std::io::BufWriter::new(
        std::fs::File::create(&index_path).with_context(|| format!("cannot create {}", index_path.display()))?,
    );
    writeln!(index, "variant,function,dimension,seed,completed_steps,evaluations,final_error,aborted")
        .context("writing sweep.csv")?;

    let mut first_abort = None;
    for (k, r) in runs.iter().enumerate() {
        log::info!("sweep run {}/{}: {}", k + 1, runs.len(), r.dir.display());
        let trace = match execute(&r.config, &r.dir, spec.logging) {
            Ok(t) => Some(t),
            Err(CliError::Abort(msg)) => {
                log::error!("{}: {msg}", r.dir.display());
                first_abort.get_or_insert(CliError::Abort(format!("{}: {msg}", r.dir.display())));
                None
            }
            Err(e) => return Err(e),
        };
        let (steps, evals, err) = trace
            .as_ref()
            .map_or((0, 0, f64::NAN), |t| (t.completed_steps(), t.total_evaluations(), t.final_error()));
        writeln!(
            index,
            "{},{},{},{},{steps},{evals},{err:e},{}",
            r.variant,
            r.config.problem.function,
            r.config.problem.dimension,
            r.config.seed,
            trace.is_none() as u8
        )
        .context("writing sweep.csv")?;
    }
    index.flush().context("writing sweep.csv")?;
    match first_abort {
        Some(e) => Err(e),
        None => Ok(runs.len()),
    }
}

pub fn power(n: u64, d: u64, m: u64, dt_ms: f64) -> Result<PowerEstimate, CliError> {
    estimate_power(n, d, m, dt_ms * 1e-3).map_err(|e| CliError::Config(e.to_string()))
}

pub fn scale(spec: &ScaleSpec) -> Result<ScalingReport, CliError> {
    let report = measure_scaling(&spec.base, &spec.cells(), spec.reps, spec.steps)?;
    std::fs::create_dir_all(&spec.out).with_context(|| format!("cannot create {}", spec.out.display()))?;
    write_scaling_csv(&spec.out.join("scaling.csv"), &report)?;
    write_json(&spec.out.join("scaling.json"), &report)?;
    Ok(report)
}

/// Applies command-line overrides to a loaded run configuration.
pub fn apply_overrides(config: &mut RunConfig, seed: Option<u64>, mode: Option<ExecutionMode>) {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(m) = mode {
        config.mode = m;
    }
}
