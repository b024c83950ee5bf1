use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sciclass::pipeline::{Pipeline, RunConfig};
use sciclass::preprocess::Scenario;
use sciclass::synthetic::{write_desk, SyntheticSpec};
use sciclass::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sciclass",
    version,
    about = "Staged text classification and dataset expansion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    run_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Restrict to these backends (repeatable).
    #[arg(long = "backend")]
    backends: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    Ingest(RunArgs),
    Split(RunArgs),
    /// Train on the original split, or on the expanded one after `expand`.
    Train(RunArgs),
    Infer(RunArgs),
    Vote(RunArgs),
    Expand(RunArgs),
    Evaluate(RunArgs),
    Report(RunArgs),
    /// ingest, split, train, infer, vote, expand, train, evaluate, report.
    Run(RunArgs),
    /// Write a synthetic desk-scale corpus and config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn open(args: &RunArgs) -> Result<Pipeline> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(s) = args.scenario {
        config.scenario = s;
    }
    config.select_backends(&args.backends)?;
    Pipeline::open(config, args.run_dir.as_deref())
}

fn execute(command: Command) -> Result<()> {
    let (stage, args) = match command {
        Command::Synth { out, seed } => {
            let mut spec = SyntheticSpec::default();
            if let Some(s) = seed {
                spec.seed = s;
            }
            let path = write_desk(&out, &spec)?;
            println!("{}", path.display());
            return Ok(());
        }
        Command::Run(a) => {
            open(&a)?.run_all()?;
            return Ok(());
        }
        Command::Ingest(a) => ("ingest", a),
        Command::Split(a) => ("split", a),
        Command::Train(a) => ("train", a),
        Command::Infer(a) => ("infer", a),
        Command::Vote(a) => ("vote", a),
        Command::Expand(a) => ("expand", a),
        Command::Evaluate(a) => ("evaluate", a),
        Command::Report(a) => ("report", a),
    };
    let out = open(&args)?.run_stage(stage)?;
    println!("{}", serde_json::to_string(&out).map_err(Error::from)?);
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
