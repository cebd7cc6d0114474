use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use schwarz_cli::config::Seed;
use schwarz_cli::{execute, parse_config, CliError, Command, Experiment, Invocation};

#[derive(Parser)]
#[command(name = "schwarz", version, about = "Run multiplicative Schwarz experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 1 when a bound whose hypotheses hold is violated.
    #[arg(long)]
    assert_bounds: bool,
    /// Directory for the CSV and JSON outputs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// One trajectory, written as a per-step CSV.
    Run(Common),
    /// Monte Carlo estimate of the expected squared error.
    Expect(Common),
    /// Theoretical bound curve.
    Bounds(Common),
    /// Log-log slope of the error over a window of steps.
    Rate(Common),
    /// Invariant and oracle checks.
    Check(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Run(a) => (Command::Run, a),
        Cmd::Expect(a) => (Command::Expect, a),
        Cmd::Bounds(a) => (Command::Bounds, a),
        Cmd::Rate(a) => (Command::Rate, a),
        Cmd::Check(a) => (Command::Check, a),
    };
    match go(command, &args) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn go(command: Command, args: &Common) -> Result<schwarz_cli::Report, CliError> {
    let text =
        fs::read_to_string(&args.config).map_err(|e| CliError::Setup(format!("{}: {e}", args.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed {
        config.seed = Seed(seed);
    }
    let exp = Experiment::build(config)?;
    execute(&exp, &Invocation { command, out_dir: args.out.clone(), assert_bounds: args.assert_bounds })
}
