//! Command-line front end: `run`, `sweep`, `stability`, and `io`.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use steptrunc_cli::config::ExperimentConfig;
use steptrunc_cli::runner;
use steptrunc_cli::CliError;

#[derive(Parser)]
#[command(name = "steptrunc-cli", about = "Benchmark harness for step-truncation integrators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and emit per-step CSV diagnostics.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the same experiment across several step sizes and fit the
    /// convergence slope.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated list of step sizes (at least 3).
        #[arg(long, value_delimiter = ',', required = true)]
        dt: Vec<f64>,
    },
    /// Compare an explicit and an implicit scheme on the same stiff setup.
    Stability {
        #[arg(long)]
        config_explicit: PathBuf,
        #[arg(long)]
        config_implicit: PathBuf,
    },
    /// TT checkpoint I/O.
    Io {
        #[command(subcommand)]
        op: IoOp,
    },
}

#[derive(Subcommand)]
enum IoOp {
    /// Write a seeded random TT checkpoint.
    Save {
        path: PathBuf,
        /// Comma-separated mode sizes, e.g. 8,8,8.
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<usize>,
        /// Comma-separated internal ranks (one fewer than the modes).
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Load a checkpoint and print its shape, ranks and norm.
    Load { path: PathBuf },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch() -> Result<(), CliError> {
    match Cli::parse().cmd {
        Cmd::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = runner::run_experiment(&cfg)?;
            if let Some(failure) = outcome.failure {
                return Err(CliError::Runtime(format!(
                    "step failure after {} rows: {failure}",
                    outcome.rows.len()
                )));
            }
            if outcome.stopped_steady {
                eprintln!("steady-state stop triggered after {} steps", outcome.rows.len());
            }
            Ok(())
        }
        Cmd::Sweep { config, dt } => {
            let cfg = ExperimentConfig::load(&config)?;
            let sweep = runner::convergence_sweep(&cfg, &dt)?;
            match &cfg.output_csv {
                Some(path) => {
                    let mut f = std::fs::File::create(path)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    runner::write_sweep_csv(&mut f, &sweep)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                }
                None => {
                    let mut out = std::io::stdout();
                    runner::write_sweep_csv(&mut out, &sweep)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                }
            }
            if let Some(slope) = sweep.slope {
                println!("slope,{slope:.6}");
            }
            if let Some(failure) = sweep.failure {
                return Err(CliError::Runtime(format!(
                    "sweep aborted after {} rows: {failure}",
                    sweep.table.len()
                )));
            }
            Ok(())
        }
        Cmd::Stability { config_explicit, config_implicit } => {
            let exp_cfg = ExperimentConfig::load(&config_explicit)?;
            let imp_cfg = ExperimentConfig::load(&config_implicit)?;
            let verdict = runner::stability_compare(&exp_cfg, &imp_cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&verdict)
                    .map_err(|e| CliError::Runtime(e.to_string()))?
            );
            Ok(())
        }
        Cmd::Io { op } => match op {
            IoOp::Save { path, modes, ranks, seed } => runner::io_save(&path, &modes, &ranks, seed),
            IoOp::Load { path } => {
                let summary = runner::io_load(&path)?;
                println!("{summary}");
                Ok(())
            }
        },
    }
}
