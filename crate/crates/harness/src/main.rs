use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zn_harness::fit::{fit_rows, parse_model, RowFilter};
use zn_harness::oracle_check;
use zn_harness::plot::{emit_plot_data, Figure};
use zn_harness::table::read_rows;
use zn_harness::{resume, run_sweep, ExperimentConfig, Mode, Result, SweepOutcome};

#[derive(Parser)]
#[command(
    name = "zn-harness",
    version,
    about = "Worm-algorithm sweeps for Z_N charge sharpening"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or continue) the sweep described by a TOML or JSON config.
    Sweep {
        config: PathBuf,
        /// Write into this directory instead of the config's `output_dir`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a config in oracle-check mode and compare against enumeration.
    OracleCheck {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit plot-ready data from a completed run directory.
    PlotData {
        dir: PathBuf,
        #[arg(long, value_enum)]
        figure: Figure,
        /// Order-parameter threshold for sharpening times.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Fit a scaling model to rows of an observables CSV; prints JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// exp_L, linear_t_over_L or exp_t.
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "ln_ratio")]
        observable: String,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Continue an interrupted run from its output directory.
    Resume { dir: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &PathBuf, output: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(dir) = output {
        config.output_dir = dir;
    }
    Ok(config)
}

fn report_sweep(outcome: &SweepOutcome) -> ExitCode {
    let failed = outcome.failed();
    println!(
        "{}: {} tasks, {} rows, config {}",
        outcome.output_dir.display(),
        outcome.manifest.tasks.len(),
        outcome.rows.len(),
        &outcome.manifest.config_hash[..12]
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for entry in outcome.manifest.tasks.iter().filter(|t| t.error.is_some()) {
            eprintln!(
                "task {} failed: {}",
                entry.id,
                entry.error.as_deref().unwrap_or("")
            );
        }
        eprintln!("{} task(s) failed", failed.len());
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep { config, output } => {
            let config = load(&config, output)?;
            Ok(report_sweep(&run_sweep(&config)?))
        }
        Command::Resume { dir } => Ok(report_sweep(&resume(&dir)?)),
        Command::OracleCheck { config, output } => {
            let mut config = load(&config, output)?;
            config.mode = Mode::OracleCheck;
            let outcome = run_sweep(&config)?;
            let code = report_sweep(&outcome);
            if code != ExitCode::SUCCESS {
                return Ok(code);
            }
            let report = oracle_check::check(&config, &outcome)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::PlotData {
            dir,
            figure,
            threshold,
        } => {
            for path in emit_plot_data(&dir, figure, threshold)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            data,
            model,
            observable,
            temperature,
            n,
        } => {
            let rows = read_rows(&data)?;
            let filter = RowFilter {
                observable,
                temperature,
                n,
            };
            let fit = fit_rows(&rows, &filter, parse_model(&model)?)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
