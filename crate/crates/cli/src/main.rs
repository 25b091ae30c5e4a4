use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use neuropt_cli::commands;
use neuropt_cli::experiment::{load_json, ExperimentSpec, ScaleSpec};
use neuropt_cli::CliError;
use neuropt_core::runtime::{ExecutionMode, RunConfig};

#[derive(Parser)]
#[command(name = "neuropt", version, about = "Spiking population optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Det,
    Async,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write trace.csv, spikes.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Execute the cartesian product described by a sweep file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the energy and power estimate of one step.
    Power {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        dt_ms: f64,
    },
    /// Time runs over population sizes and dimensions; writes scaling.csv.
    Scale {
        #[arg(long)]
        config: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, seed, out, mode } => {
            let mut cfg: RunConfig = load_json(&config)?;
            let mode = mode.map(|m| match m {
                Mode::Det => ExecutionMode::Deterministic,
                Mode::Async => ExecutionMode::Concurrent,
            });
            commands::apply_overrides(&mut cfg, seed, mode);
            let trace = commands::run(&cfg, &out)?;
            println!(
                "steps {}  f_g {:e}  eps_f {:e}  evaluations {}  -> {}",
                trace.completed_steps(),
                trace.final_f_g(),
                trace.final_error(),
                trace.total_evaluations(),
                out.display()
            );
        }
        Command::Sweep { config } => {
            let spec: ExperimentSpec = load_json(&config)?;
            let count = commands::sweep(&spec)?;
            println!("{count} runs -> {}", spec.out.display());
        }
        Command::Power { n, d, m, dt_ms } => {
            let p = commands::power(n, d, m, dt_ms)?;
            println!("N_syn  {}", p.n_syn);
            println!("E_step {:.4} mJ", p.e_step * 1e3);
            println!("P_avg  {:.4} W", p.p_avg);
        }
        Command::Scale { config } => {
            let spec: ScaleSpec = load_json(&config)?;
            let report = commands::scale(&spec)?;
            println!("{:>5} {:>5} {:>12} {:>12} {:>7}", "n", "d", "mean_ms", "std_ms", "cv");
            for c in &report.cells {
                println!("{:>5} {:>5} {:>12.6} {:>12.6} {:>7.3}", c.n, c.d, c.mean_ms, c.std_ms, c.cv);
            }
            for (d, f) in &report.fit_n {
                println!("d={d}: {:.3e} ms per unit added (intercept {:.3e})", f.slope, f.intercept);
            }
            for (n, f) in &report.fit_d {
                println!("n={n}: {:.3e} ms per dimension added (intercept {:.3e})", f.slope, f.intercept);
            }
            println!("-> {}", spec.out.join("scaling.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
