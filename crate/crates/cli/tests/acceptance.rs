//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use ndarray::{Array2, Array3};
use neuropt_cli::experiment::{load_json, ScaleSpec};
use neuropt_core::coordination::{tensor_contract, InfoTopologyKind, SpikeTopology, SpikeTopologyKind};
use neuropt_core::dynamics::{
    simulate_neuron, Integrator, IzhikevichModel, LinearModel, NeuroState, NeuronModel,
};
use neuropt_core::runtime::{measure_scaling, Budget, ExecutionMode, RunConfig, RunTrace};
use neuropt_core::run;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn rel_err(x: f64, target: f64) -> f64 {
    (x - target).abs() / target.abs()
}

fn energy() -> Outcome {
    let p = neuropt_core::runtime::estimate_power(90, 40, 89, 0.5e-3).unwrap();
    let (e, w) = (rel_err(p.e_step, 0.67e-3), rel_err(p.p_avg, 1.35));
    outcome(
        e <= 0.01 && w <= 0.01,
        format!("E_step {:.4} mJ (rel err {e:.2e}), P_avg {:.4} W (rel err {w:.2e})", p.e_step * 1e3, p.p_avg),
    )
}

fn contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=4);
        let density: f64 = rng.random();
        let w = Array2::from_shape_fn((n, n), |(i, k)| i != k && rng.random_bool(density));
        let s = Array2::from_shape_fn((n, d), |_| rng.random_bool(0.4));
        let topo = SpikeTopology::from_matrix(w.clone()).unwrap();
        let got = tensor_contract(&topo, s.view()).unwrap();
        // replicated adjacency, then OR over presynaptic units of AND
        let tensor = Array3::from_shape_fn((n, n, d), |(i, k, _)| w[[i, k]]);
        for i in 0..n {
            for j in 0..d {
                let expect = (0..n).any(|k| tensor[[i, k, j]] && s[[k, j]]);
                mismatches += (got[[i, j]] != expect) as usize;
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over 200 instances"))
}

fn period_error(steps: usize) -> f64 {
    let model = NeuronModel::Linear(LinearModel::new([[0.0, -1.0], [1.0, 0.0]]).unwrap());
    let h = std::f64::consts::TAU / steps as f64;
    let mut v = NeuroState([1.0, 0.0]);
    for _ in 0..steps {
        v = Integrator::Rk4.step(&model, v, h).unwrap();
    }
    ((v.v1() - 1.0).powi(2) + v.v2().powi(2)).sqrt()
}

fn integrator_order() -> Outcome {
    // 628 steps span one period with h = 0.010005
    let coarse = period_error(628);
    let fine = period_error(1256);
    let ratio = coarse / fine;
    outcome(
        coarse <= 1e-6 && ratio >= 10.0,
        format!("period error {coarse:.3e} at h=2pi/628, {fine:.3e} at half step, ratio {ratio:.2}"),
    )
}

fn cli_run(config: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_neuropt"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--mode", "det"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn csv_f_g(text: &str) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

fn determinism(csv_monotone: &mut Vec<bool>) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_root().join("configs/neuropt-lin.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if !cli_run(&config, &a) || !cli_run(&config, &b) {
        return outcome(false, "neuropt run failed".into());
    }
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    let tb = std::fs::read(b.join("trace.csv")).unwrap();
    let text = String::from_utf8(ta.clone()).unwrap();
    let f_g = csv_f_g(&text);
    csv_monotone.push(f_g.windows(2).all(|w| w[1] <= w[0]));
    outcome(
        ta == tb && f_g.len() == 2001,
        format!("{} bytes, {} rows, identical: {}", ta.len(), f_g.len(), ta == tb),
    )
}

fn convergence(traces: &mut Vec<RunTrace>) -> Outcome {
    let cases = [("sphere", 1e-6, 18), ("ellipsoid_separable", 1e-6, 18), ("rastrigin", 1e-2, 14)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (function, tol, needed) in cases {
        let runs: Vec<RunTrace> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..20u64)
                .map(|seed| s.spawn(move || run(&RunConfig::neuropt_lin(function, 2, seed)).unwrap()))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let hits = runs.iter().filter(|t| t.abort.is_none() && t.final_error() <= tol).count();
        let mut errs: Vec<f64> = runs.iter().map(|t| t.final_error()).collect();
        errs.sort_by(f64::total_cmp);
        pass &= hits >= needed;
        parts.push(format!("{function} {hits}/20 <= {tol:e} (median {:.1e})", errs[10]));
        traces.extend(runs);
    }
    outcome(pass, parts.join(", "))
}

fn spiking_sanity() -> Outcome {
    let model = NeuronModel::Izhikevich(IzhikevichModel::new(0.02, 0.2, -65.0, 8.0, 10.0).unwrap());
    let v0 = NeuroState([-65.0, 0.2 * -65.0]);
    let coarse = simulate_neuron(&model, Integrator::Rk4, v0, 0.01, 50.0, 30.0).unwrap();
    let reference = simulate_neuron(&model, Integrator::Rk4, v0, 0.001, 50.0, 30.0).unwrap();
    match (coarse.first_spike(), reference.first_spike()) {
        (Some(t), Some(r)) => {
            let close = (t - r).abs() <= 0.05;
            outcome(
                close,
                format!(
                    "first crossing t={t:.3} (reference {r:.3}), {} crossings (reference {})",
                    coarse.spike_times.len(),
                    reference.spike_times.len()
                ),
            )
        }
        (t, r) => outcome(false, format!("no crossing before t=50: {t:?} vs reference {r:?}")),
    }
}

fn scaling() -> Outcome {
    let spec: ScaleSpec = load_json(&repo_root().join("configs/scale.json")).unwrap();
    let start = Instant::now();
    let report = match measure_scaling(&spec.base, &spec.cells(), spec.reps, spec.steps) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mean = |n, d| report.cell(n, d).unwrap().mean_ms;
    let mut bad = Vec::new();
    for &d in &spec.dimensions {
        for w in spec.units.windows(2) {
            if mean(w[1], d) < mean(w[0], d) {
                bad.push(format!("n {}->{} at d={d}", w[0], w[1]));
            }
        }
    }
    for &n in &spec.units {
        for w in spec.dimensions.windows(2) {
            if mean(n, w[1]) < mean(n, w[0]) {
                bad.push(format!("d {}->{} at n={n}", w[0], w[1]));
            }
        }
    }
    let worst_cv = report.cells.iter().map(|c| c.cv).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let (n_max, d_max) = (*spec.units.last().unwrap(), *spec.dimensions.last().unwrap());
    outcome(
        bad.is_empty() && worst_cv < 0.5 && elapsed <= Duration::from_secs(600),
        format!(
            "{} cells, max cv {worst_cv:.3}, decreasing pairs {bad:?}, {:.4} ms/step/unit at n={n_max} d={d_max}, {:.1}s",
            report.cells.len(),
            mean(n_max, d_max),
            elapsed.as_secs_f64()
        ),
    )
}

fn liveness(traces: &mut Vec<RunTrace>) -> Outcome {
    let mut cfg = RunConfig::neuropt_hyb("sphere", 2, 0);
    cfg.mode = ExecutionMode::Concurrent;
    cfg.topology.spike = SpikeTopologyKind::Full;
    cfg.topology.info = InfoTopologyKind::Full;
    cfg.topology.m = None;
    let budget = cfg.steps();
    let (tx, rx) = mpsc::channel();
    let start = Instant::now();
    std::thread::spawn(move || {
        let _ = tx.send(run(&cfg));
    });
    match rx.recv_timeout(Duration::from_secs(60)) {
        Ok(Ok(trace)) => {
            let done = trace.abort.is_none() && trace.completed_steps() == budget;
            let monotone = trace.is_monotone();
            let detail = format!(
                "{}/{budget} steps in {:.2}s, final error {:.1e}, monotone {monotone}",
                trace.completed_steps(),
                start.elapsed().as_secs_f64(),
                trace.final_error()
            );
            traces.push(trace);
            outcome(done && monotone, detail)
        }
        Ok(Err(e)) => outcome(false, e.to_string()),
        Err(_) => outcome(false, "no result within 60 s".into()),
    }
}

/// Extra short runs of every variant and mode for the monotonicity check.
fn variant_traces() -> Vec<RunTrace> {
    let mut out = Vec::new();
    for function in ["sphere", "rastrigin", "schwefel", "rosenbrock"] {
        for mode in [ExecutionMode::Deterministic, ExecutionMode::Concurrent] {
            for mut cfg in [
                RunConfig::neuropt_lin(function, 5, 3),
                RunConfig::neuropt_izh(function, 5, 3),
                RunConfig::neuropt_hyb(function, 5, 3),
            ] {
                cfg.mode = mode;
                cfg.budget = Budget::Steps(500);
                out.push(run(&cfg).unwrap());
            }
        }
    }
    out
}

fn monotonicity(traces: &[RunTrace], csv_monotone: &[bool]) -> Outcome {
    let bad = traces.iter().filter(|t| !t.is_monotone()).count();
    let csv_bad = csv_monotone.iter().filter(|&&m| !m).count();
    outcome(
        bad == 0 && csv_bad == 0,
        format!(
            "{} traces and {} written trace.csv files, {} non-monotone",
            traces.len(),
            csv_monotone.len(),
            bad + csv_bad
        ),
    )
}

fn main() {
    let mut traces = Vec::new();
    let mut csv_monotone = Vec::new();
    let mut results: Vec<(u8, &str, Outcome)> = vec![
        (1, "energy model", energy()),
        (2, "contraction oracle", contraction()),
        (3, "integrator order", integrator_order()),
        (4, "determinism", determinism(&mut csv_monotone)),
    ];
    let c6 = convergence(&mut traces);
    let c7 = spiking_sanity();
    let c8 = scaling();
    let c9 = liveness(&mut traces);
    traces.extend(variant_traces());
    results.push((5, "greedy monotonicity", monotonicity(&traces, &csv_monotone)));
    results.push((6, "convergence", c6));
    results.push((7, "spiking dynamics", c7));
    results.push((8, "scaling shape", c8));
    results.push((9, "concurrent liveness", c9));

    let mut failed = 0;
    for (k, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += !o.pass as usize;
        println!("{tag} criterion {k} ({name}): {}", o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
