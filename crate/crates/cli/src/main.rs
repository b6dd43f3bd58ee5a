use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qkdsim::scenario::{default_bound_seed, default_budget, env_seed, scenario_from_value};
use qkdsim::{emit_report, exit, parse_scenario, run_scenario, CliError, Format};
use serde_json::json;

/// Simulate QKD links and Bell-measurement position verification.
#[derive(Parser, Debug)]
#[command(name = "qkdsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimize the LOCC attack error rate over product states.
    Bound {
        /// Objective evaluations available to the optimizer.
        #[arg(long, default_value_t = default_budget())]
        budget: usize,
        /// Also scan a grid with spacing π/N (N = 200 takes a few seconds).
        #[arg(long, default_value_t = 0)]
        grid: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare MDI gain and BB84 kept fraction across a parameter range.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepParam {
    /// Detector efficiency.
    Eta,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// RNG seed. Falls back to the scenario's rngSeed, then QKDSIM_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to csv for `sweep`, json otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn seed_or(flag: Option<u64>, fallback: u64) -> Result<u64, CliError> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(fallback),
    })
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    let (scenario, output, default_format) = match cli.command {
        Command::Simulate { scenario, output } => (parse_scenario(&scenario, output.seed)?, output, Format::Json),
        Command::Bound { budget, grid, output } => {
            let value = json!({ "kind": "qpv-bound", "parameters": { "budget": budget, "gridDivisions": grid } });
            let seed = seed_or(output.seed, default_bound_seed())?;
            (scenario_from_value(value, Some(seed))?, output, Format::Json)
        }
        Command::Sweep {
            param: SweepParam::Eta,
            values,
            rounds,
            output,
        } => {
            let value = json!({ "kind": "rate-compare", "parameters": { "rounds": rounds, "etas": values } });
            let seed = seed_or(output.seed, 0)?;
            (scenario_from_value(value, Some(seed))?, output, Format::Csv)
        }
    };
    let report = run_scenario(&scenario)?;
    emit_report(&report, output.format.unwrap_or(default_format), output.out.as_deref())?;
    if let Some(reason) = report.abort_reason() {
        eprintln!("qkdsim: protocol aborted: {reason}");
        return Ok(exit::PROTOCOL_ABORT);
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qkdsim: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
