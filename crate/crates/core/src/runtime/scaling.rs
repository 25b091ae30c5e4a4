//! Runtime scaling with population size and dimension.

use serde::Serialize;

use super::config::{Budget, ExecutionMode, RunConfig};
use super::{run_resolved, RunError};

/// Repetitions per configuration.
pub const SCALING_REPS: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingCell {
    pub n: usize,
    pub d: usize,
    /// Per-step-per-unit runtime of each repetition, in ms.
    pub samples_ms: Vec<f64>,
    pub mean_ms: f64,
    pub std_ms: f64,
    /// Relative variability `std / mean`.
    pub cv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub cells: Vec<ScalingCell>,
    /// Runtime against `n`, one fit per dimension with at least two sizes.
    pub fit_n: Vec<(usize, LinearFit)>,
    /// Runtime against `d`, one fit per size with at least two dimensions.
    pub fit_d: Vec<(usize, LinearFit)>,
}

impl ScalingReport {
    pub fn cell(&self, n: usize, d: usize) -> Option<&ScalingCell> {
        self.cells.iter().find(|c| c.n == n && c.d == d)
    }
}

/// Ordinary least squares; `None` when the abscissae do not vary.
pub fn fit_line(points: &[(f64, f64)]) -> Option<LinearFit> {
    let k = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn group_fits(cells: &[ScalingCell], key: impl Fn(&ScalingCell) -> usize, x: impl Fn(&ScalingCell) -> usize) -> Vec<(usize, LinearFit)> {
    let mut keys: Vec<usize> = cells.iter().map(&key).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .filter_map(|k| {
            let pts: Vec<(f64, f64)> = cells.iter().filter(|c| key(c) == k).map(|c| (x(c) as f64, c.mean_ms)).collect();
            fit_line(&pts).map(|f| (k, f))
        })
        .collect()
}

/// Times `reps` deterministic runs of `steps` steps for every `(n, d)`.
///
/// Each run derives from `base` with the population size, dimension,
/// budget and seed replaced. Only the step loop is timed.
pub fn measure_scaling(
    base: &RunConfig,
    cells: &[(usize, usize)],
    reps: usize,
    steps: u64,
) -> Result<ScalingReport, RunError> {
    if cells.len() < 2 {
        return Err(RunError::Config("scaling needs at least two (n, d) configurations".into()));
    }
    if reps == 0 || steps == 0 {
        return Err(RunError::Config("scaling needs at least one repetition and one step".into()));
    }
    let configure = |n: usize, d: usize, rep: usize| {
        let mut cfg = base.clone();
        cfg.units = n;
        cfg.problem.dimension = d;
        cfg.budget = Budget::Steps(steps);
        cfg.seed = base.seed.wrapping_add(rep as u64);
        cfg.mode = ExecutionMode::Deterministic;
        cfg.record_states = false;
        cfg
    };

    // warm caches and the allocator before anything is timed
    run_resolved(configure(cells[0].0, cells[0].1, 0).resolve()?, ExecutionMode::Deterministic);

    let mut out = Vec::with_capacity(cells.len());
    for &(n, d) in cells {
        let mut samples = Vec::with_capacity(reps);
        for rep in 0..reps {
            let trace = run_resolved(configure(n, d, rep).resolve()?, ExecutionMode::Deterministic);
            if let Some(e) = trace.abort {
                return Err(RunError::Config(format!("scaling run n={n}, d={d} aborted: {e}")));
            }
            let total: f64 = trace.step_time_ms.iter().skip(1).sum();
            samples.push(total / (steps as f64 * n as f64));
        }
        let (mean, std) = mean_std(&samples);
        out.push(ScalingCell {
            n,
            d,
            samples_ms: samples,
            mean_ms: mean,
            std_ms: std,
            cv: if mean > 0.0 { std / mean } else { 0.0 },
        });
    }
    Ok(ScalingReport {
        fit_n: group_fits(&out, |c| c.d, |c| c.n),
        fit_d: group_fits(&out, |c| c.n, |c| c.d),
        cells: out,
    })
}
