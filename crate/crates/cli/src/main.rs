//! `nspregen` command-line front end.

mod error;
mod eval;
mod inspect;
mod plan;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nspregen::config::RunConfig;

use error::{CmdResult, Failure, ResultExt};

#[derive(Debug, Parser)]
#[command(name = "nspregen", version, about = "Difficulty-graded Navier-Stokes dataset generation")]
struct Cli {
    /// Run configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; relative paths resolve against it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for generation.
    #[arg(long, global = true, env = "NSPREGEN_WORKERS")]
    workers: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate every trajectory of a manifest.
    Generate(run::GenerateArgs),
    /// Measure per-tier generation cost along one axis.
    Profile(run::ProfileArgs),
    /// Emit alpha-sweep or budget-augmentation manifests and savings tables.
    Plan(plan::PlanArgs),
    /// Score predicted trajectories against ground truth.
    Eval(eval::EvalArgs),
    /// Export one field of a trajectory as CSV or SVG.
    Inspect(inspect::InspectArgs),
    /// Export a raw payload or resample a trajectory.
    Convert(inspect::ConvertArgs),
    /// Print the effective configuration.
    Config(ConfigArgs),
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// Print the built-in defaults instead of the loaded configuration.
    #[arg(long)]
    dump_defaults: bool,
}

/// Effective configuration and worker override.
pub struct Context {
    pub config: RunConfig,
    pub workers: usize,
}

fn load_context(cli: &Cli) -> Result<Context, Failure> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).usage()?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    let workers = config.worker_count(cli.workers);
    Ok(Context { config, workers })
}

fn dispatch(cli: Cli) -> CmdResult {
    if let Command::Config(args) = &cli.command {
        if args.dump_defaults {
            print!("{}", RunConfig::default().to_toml_string());
            return Ok(());
        }
    }
    let ctx = load_context(&cli)?;
    match cli.command {
        Command::Generate(a) => run::generate(&ctx, a),
        Command::Profile(a) => run::profile(&ctx, a),
        Command::Plan(a) => plan::plan(&ctx, a),
        Command::Eval(a) => eval::eval(&ctx, a),
        Command::Inspect(a) => inspect::inspect(&ctx, a),
        Command::Convert(a) => inspect::convert(&ctx, a),
        Command::Config(_) => {
            print!("{}", ctx.config.to_toml_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
