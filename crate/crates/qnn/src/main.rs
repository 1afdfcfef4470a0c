use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kerr_qnn::config::{schema_json, ExperimentConfig};
use kerr_qnn::figure::{figure_csv, figure_rows, Figure};
use kerr_qnn::output::write_atomic;
use kerr_qnn::run::run_to_dir;

#[derive(Parser)]
#[command(name = "qnn", version, about = "Kerr-nonlinear quantum neural network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (or repeat the run recorded in a manifest.json).
    Run {
        config: PathBuf,
        /// Worker threads for sweep points; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory, overriding `output_dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate sweep results into a plot-ready CSV.
    EmitFigure {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Print the JSON schema of the config format.
    Schema,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match Cli::parse().command {
        Command::Run { config, jobs, out } => {
            let (cfg, text) = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(2, e),
            };
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            match run_to_dir(&cfg, text.as_bytes(), &dir, jobs) {
                Ok(files) => {
                    for f in files {
                        log::info!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e.exit_code() as u8, e),
            }
        }
        Command::EmitFigure { figure, results, out } => {
            let csv = match figure_rows(figure, &results) {
                Ok(rows) => figure_csv(&rows),
                Err(e) => return fail(2, e),
            };
            match out {
                Some(path) => match write_atomic(&path, &csv) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(1, e),
                },
                None => {
                    print!("{}", String::from_utf8_lossy(&csv));
                    ExitCode::SUCCESS
                }
            }
        }
        Command::Validate { config } => {
            match ExperimentConfig::load(&config).map_err(|e| e.to_string()).and_then(|(c, _)| {
                c.resolve().map_err(|e| e.to_string())
            }) {
                Ok(_) => {
                    println!("{}: ok", config.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(2, e),
            }
        }
        Command::Schema => {
            print!("{}", schema_json());
            ExitCode::SUCCESS
        }
    }
}

fn fail(code: u8, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}
