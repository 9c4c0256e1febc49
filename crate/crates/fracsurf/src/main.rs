use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracsurf::runner::{self, RunError};

/// Countable bivariate fractal interpolation surfaces: solve, approximate
/// the attractor, and verify the operator bounds.
#[derive(Parser)]
#[command(name = "fracsurf", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path overrides, e.g. --override solve.tol=1e-6 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker cap for parallelizable stages.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the interpolating surface and export it.
    Build(RunArgs),
    /// Partial-attractor schedule, cloud exports and convergence report.
    Attractor(RunArgs),
    /// Matching, perturbation, convergence and invariant-subspace checks.
    Verify(RunArgs),
    /// Operator-property probes over the germ corpus.
    Operator(RunArgs),
    /// All of the above.
    All(RunArgs),
}

fn dispatch(cmd: &Cmd) -> Result<(), RunError> {
    let (args, run): (&RunArgs, fn(&runner::Workspace, usize) -> Result<(), RunError>) = match cmd {
        Cmd::Build(a) => (a, |ws, _| runner::cmd_build(ws)),
        Cmd::Attractor(a) => (a, runner::cmd_attractor),
        Cmd::Verify(a) => (a, |ws, _| runner::cmd_verify(ws)),
        Cmd::Operator(a) => (a, |ws, _| runner::cmd_operator(ws)),
        Cmd::All(a) => (a, runner::cmd_all),
    };
    let ws = runner::prepare(&args.config, &args.overrides)?;
    run(&ws, args.jobs.max(1))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracsurf: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
