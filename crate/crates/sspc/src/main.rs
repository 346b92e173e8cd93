use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sspc::derivatives::run_check_derivatives;
use sspc::run::{run_simulate, run_solve, run_sweep_ell};
use sspc::{ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "sspc", version, about = "Semismooth predictor-corrector suboptimal MPC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Correctors per sample (overrides `sspc.ell`).
        #[arg(long)]
        ell: Option<usize>,
    },
    /// One simulation per corrector budget, plus metrics.csv.
    SweepEll {
        #[command(flatten)]
        common: Common,
        /// Comma-separated budgets (overrides `sweep_ell`).
        #[arg(long, value_delimiter = ',')]
        ell: Vec<usize>,
    },
    /// Compare analytic derivatives against finite differences.
    CheckDerivatives {
        #[command(flatten)]
        common: Common,
    },
    /// Solve to convergence at the initial state and print z and the residual.
    Solve {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(f64::to_string).collect();
    format!("[{}]", items.join(", "))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { common, ell } => {
            let mut cfg = load(&common)?;
            if let Some(ell) = ell {
                cfg.sspc.ell = ell;
            }
            let out = run_simulate(&cfg)?;
            print!(
                "{}",
                std::fs::read_to_string(out.dir.join("summary.txt")).unwrap_or_default()
            );
            Ok(out.trace.is_complete())
        }
        Command::SweepEll { common, ell } => {
            let mut cfg = load(&common)?;
            if !ell.is_empty() {
                cfg.sweep_ell = ell;
            }
            let ells = cfg.sweep_ell.clone();
            let out = run_sweep_ell(&cfg, &ells)?;
            for (ell, run) in ells.iter().zip(&out.runs) {
                match run {
                    Ok(o) => match &o.trace.failure {
                        None => println!("ell {ell}: {}", o.trace_path().display()),
                        Some(e) => println!("ell {ell}: aborted ({e}), partial trace {}", o.trace_path().display()),
                    },
                    Err(e) => println!("ell {ell}: {e}"),
                }
            }
            println!("metrics: {}", cfg.out_dir.join("metrics.csv").display());
            Ok(out.all_completed())
        }
        Command::CheckDerivatives { common } => {
            let cfg = load(&common)?;
            let report = run_check_derivatives(&cfg)?;
            print!("{report}");
            println!(
                "{} points, max abs error {:.3e}: {}",
                report.points,
                report.max_abs_error(),
                if report.passes() { "pass" } else { "FAIL" }
            );
            Ok(report.passes())
        }
        Command::Solve { common } => {
            let cfg = load(&common)?;
            let out = run_solve(&cfg)?;
            println!("iterations = {}", out.iterations);
            println!("residual = {:e}", out.residual);
            if let Some(u) = &out.control {
                println!("u0 = {}", fmt_vec(u));
            }
            println!("w = {}", fmt_vec(&out.z.w));
            println!("lambda = {}", fmt_vec(&out.z.lambda));
            println!("v = {}", fmt_vec(&out.z.v));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
