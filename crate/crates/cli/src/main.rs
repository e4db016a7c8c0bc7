//! Command-line driver for the irreversible-evolution experiments.
//!
//! Exit codes: 0 success, 1 a tolerance was violated, 2 bad configuration or input.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::RunError;
use crate::config::Config;

#[derive(Parser)]
#[command(name = "lyapunov", version, about = "Lyapunov variables and temporal ordering on a discretized Hardy space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file; the built-in default is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the CSV and JSON files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 picks automatically).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Overrides state.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run every acceptance criterion.
    Selftest,
    /// Expectation of the Lyapunov variable along the evolution.
    LyapunovCurve,
    /// Norms and semigroup residuals of the compressed evolution.
    SemigroupNorms,
    /// The projection family and the time operator on the dense grid.
    ProjectionFamily,
    /// Reversible versus irreversible matrix elements.
    MatrixElement,
    /// Grid refinement study.
    Convergence,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Selftest => "selftest",
            Command::LyapunovCurve => "lyapunov-curve",
            Command::SemigroupNorms => "semigroup-norms",
            Command::ProjectionFamily => "projection-family",
            Command::MatrixElement => "matrix-element",
            Command::Convergence => "convergence",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.state.seed = seed;
    }
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: creating {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    let name = cli.command.name();
    match commands::run(name, &cfg, &cli.out) {
        Ok(report) => {
            for line in &report.notes {
                eprintln!("{line}");
            }
            let status = if report.passed { "passed" } else { "TOLERANCE VIOLATED" };
            println!("{name}: {status}; wrote {}", cli.out.join(format!("{name}.csv")).display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) | RunError::Core(_) | RunError::Io(_) => ExitCode::from(2),
            }
        }
    }
}
