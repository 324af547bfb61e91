use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use gshift::cli::{run, to_csv, Command, RunConfig};

/// Bounds for Gaussian measures of shifted symmetric convex sets.
#[derive(Parser)]
#[command(name = "gshift", version)]
struct Cli {
    /// Worker threads for Monte Carlo sampling (default: all cores).
    #[arg(long, global = true, env = "GSHIFT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lower and upper ratio bounds over a grid of shifts.
    Bounds(Io),
    /// The power envelope of the test rejecting outside a region.
    Power(Io),
    /// Run a verification suite; exits nonzero if any verdict fails.
    Verify(Io),
    /// Support-function values of a body.
    Support(Io),
}

#[derive(Args)]
struct Io {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV table for plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
}

const EXIT_VERDICT_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("could not configure {n} threads: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    let (command, io) = match cli.command {
        Cmd::Bounds(io) => (Command::Bounds, io),
        Cmd::Power(io) => (Command::Power, io),
        Cmd::Verify(io) => (Command::Verify, io),
        Cmd::Support(io) => (Command::Support, io),
    };
    match execute(command, &io) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERDICT_FAILED),
        Err(message) => {
            eprintln!("gshift {}: {message}", command.name());
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn execute(command: Command, io: &Io) -> Result<bool, String> {
    let config = RunConfig::load(&io.config).map_err(|e| e.to_string())?;
    let report = run(command, &config).map_err(|e| e.to_string())?;
    let json = report.to_json();
    match &io.out {
        Some(path) => std::fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{json}"),
    }
    if let Some(path) = &io.csv {
        std::fs::write(path, to_csv(&report)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if !report.passed() {
        for record in &report.records {
            if record.verdict() == Some(false) {
                eprintln!("FAILED: {}", serde_json::to_string(record).unwrap_or_default());
            }
        }
    }
    Ok(report.passed())
}
