use clap::{Parser, Subcommand};
use fraflow_cli::config::Mode;
use fraflow_cli::{execute, load_config, Invocation, EXIT_ERROR};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fraflow",
    version,
    about = "Time-fractional gradient flows: solve, sweep, certify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and certify the trajectory.
    Solve(Args),
    /// Run a parameter sweep of p-Laplace experiments.
    Sweep(Args),
    /// Check a trajectory dump and run the Gronwall suites.
    Certify(Args),
    /// Sonine certificates and regularized kernels.
    Kernels(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shipped preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Solve(a) => (Mode::Solve, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Certify(a) => (Mode::Certify, a),
        Command::Kernels(a) => (Mode::Kernels, a),
    };
    let code = match run(mode, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_ERROR as u8))
}

fn run(mode: Mode, args: Args) -> Result<i32, fraflow_cli::CliError> {
    let (config, base_dir) = load_config(mode, args.config.as_deref(), args.preset.as_deref())?;
    let out = args
        .out
        .or_else(|| config.output.as_ref().map(|p| base_dir.join(p)))
        .unwrap_or_else(|| PathBuf::from("fraflow-out"));
    if args.jobs == Some(0) {
        return Err(fraflow_cli::CliError::Run("--jobs must be at least 1".into()));
    }
    let inv = Invocation {
        mode,
        config,
        base_dir,
        out,
        seed: args.seed,
        jobs: args.jobs,
    };
    execute(&inv)
}
