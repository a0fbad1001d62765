use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssc_lab::experiment_harness::{
    allocate_run_dir, latest_run_dir, run_stages, Cell, ExperimentConfig, Stage,
};

#[derive(Parser)]
#[command(name = "ssc-lab", version, about = "Online level generation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the designer grid into a new run directory.
    Train(Args),
    /// Generate evaluation and baseline corpora in the latest run.
    Generate(Args),
    /// Closure, reward, MND and Div analysis of the latest run.
    Analyze(Args),
    /// Plots and the summary table of the latest run.
    Report(Args),
    /// Every stage in a new run directory.
    All(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one cell, `gamma=<v>,n=<v>`.
    #[arg(long)]
    cell: Option<Cell>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (stages, args, fresh): (&[Stage], Args, bool) = match cli.command {
        Command::Train(a) => (&[Stage::Train], a, true),
        Command::Generate(a) => (&[Stage::Generate], a, false),
        Command::Analyze(a) => (&[Stage::Analyze], a, false),
        Command::Report(a) => (&[Stage::Report], a, false),
        Command::All(a) => (&Stage::ALL, a, true),
    };
    let fallback = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match run(stages, args, fresh) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            let status = serde_json::json!({ "ok": false, "error": e.to_string(), "entries": [] });
            let path = fallback.join("status.json");
            if std::fs::create_dir_all(&fallback).is_err()
                || std::fs::write(&path, status.to_string()).is_err()
            {
                log::error!("could not write {}", path.display());
            }
            ExitCode::from(2)
        }
    }
}

fn run(stages: &[Stage], args: Args, fresh: bool) -> ssc_lab::Result<bool> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let root = args
        .out
        .unwrap_or_else(|| config.base_dir.join(&config.out_dir));
    let run_dir = if fresh {
        allocate_run_dir(&root)?
    } else {
        latest_run_dir(&root)?
    };
    let outcome = run_stages(&config, &run_dir, stages, args.cell.as_ref())?;
    println!("{}", outcome.run_dir.display());
    Ok(outcome.status.ok)
}
