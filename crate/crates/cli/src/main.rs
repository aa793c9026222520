use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sbdc_cli::commands::{cmd_analyze, cmd_reproduce, cmd_simulate, EXIT_ERROR};

/// Robustness certificates and simulation for consensus networks whose edge
/// weights are decoded from transmitted codewords.
#[derive(Debug, Parser)]
#[command(name = "sbdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute resistances, bounds and attack verdicts; exit 2 if a certificate fails.
    Analyze { scenario: PathBuf },
    /// Simulate the scenario and write the trajectory CSV and verdict.
    Simulate {
        scenario: PathBuf,
        /// Also write an SVG plot of all agent states.
        #[arg(long)]
        plot: bool,
        /// Seed for random attacks and random initial states.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Like analyze, but only report the pass/fail verdicts.
    Certify { scenario: PathBuf },
    /// Run the six-agent leader-follower benchmark grid.
    Reproduce {
        /// Print a machine-readable summary.
        #[arg(long)]
        json: bool,
        /// Step size for the discrete-time runs.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the embedded benchmark scenarios to this directory.
        #[arg(long, value_name = "DIR")]
        emit_scenarios: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Analyze { scenario } => cmd_analyze(&scenario, false),
        Command::Certify { scenario } => cmd_analyze(&scenario, true),
        Command::Simulate { scenario, plot, seed } => cmd_simulate(&scenario, plot, seed),
        Command::Reproduce { json, epsilon, emit_scenarios } => cmd_reproduce(json, epsilon, emit_scenarios.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
