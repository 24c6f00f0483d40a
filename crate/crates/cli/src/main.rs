//! `urysohn`: reproducible experiments on discretized integral operators,
//! driven by a strict TOML configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use commands::{Context, Outcome};
use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] urysohn_core::Error),
}

impl CliError {
    /// 1 for numerical failures of a well-posed run, 2 for bad input.
    fn exit_code(&self) -> u8 {
        use urysohn_core::Error as E;
        match self {
            CliError::Core(
                E::SingularLinearization { .. } | E::NonFiniteKernel { .. } | E::OutsideAdmissibleSet { .. },
            ) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "urysohn", version, about = "Experiments on discretized integral operators in Hölder spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hölder seminorms and norms of a sampled function.
    HolderEstimate(Common),
    /// Applies an operator once.
    Apply(Common),
    /// Taylor-remainder check of a Fréchet derivative.
    DerivativeCheck(Common),
    /// Nyström convergence table against a Gauss–Legendre reference.
    NystromConvergence(Common),
    /// Orbit of an integrodifference equation.
    Ide(Common),
    /// Newton solve for a fixed point.
    FixedPoint(Common),
    /// Bound, smoothing, pathology and calculus suites.
    VerifyAll(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output.dir` or `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Caps the number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Treats sampled and report-only checks as hard assertions.
    #[arg(long)]
    strict: bool,
}

type Runner = fn(&ExperimentConfig, &Context) -> Result<Outcome, CliError>;

fn run(common: Common, runner: Runner) -> Result<bool, CliError> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let cfg = ExperimentConfig::load(&common.config)?;
    let ctx = Context {
        out: common
            .out
            .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.clone()))
            .unwrap_or_else(|| PathBuf::from(".")),
        seed: common.seed.or(cfg.seed),
        strict: common.strict,
    };
    let outcome = runner(&cfg, &ctx)?;
    for l in &outcome.lines {
        println!("{l}");
    }
    ctx.finish(&outcome)?;
    println!("status: {}", if outcome.passed { "PASS" } else { "FAIL" });
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, runner): (Common, Runner) = match cli.command {
        Command::HolderEstimate(c) => (c, commands::holder_estimate),
        Command::Apply(c) => (c, commands::apply),
        Command::DerivativeCheck(c) => (c, commands::derivative_check),
        Command::NystromConvergence(c) => (c, commands::nystrom),
        Command::Ide(c) => (c, commands::ide),
        Command::FixedPoint(c) => (c, commands::fixed_point),
        Command::VerifyAll(c) => (c, commands::verify_all),
    };
    match run(common, runner) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
