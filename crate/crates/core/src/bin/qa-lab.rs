use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qa_lab::experiments::{error_report, run_experiment, Experiment, ExperimentConfig};
use qa_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "qa-lab", version, about = "Open-system annealing experiments for the weak-strong cluster problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; its experiment must match the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    Schedule(RunArgs),
    Spectrum(RunArgs),
    Rates(RunArgs),
    Evolve(RunArgs),
    #[command(name = "p-vs-h1")]
    PVsH1(RunArgs),
    #[command(name = "p-vs-t")]
    PVsT(RunArgs),
    Svmc(RunArgs),
    Kramer(RunArgs),
    Instanton(RunArgs),
    Glass(RunArgs),
    Lamb(RunArgs),
    /// Check a config and print its normalized form and hash.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(name: &str, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::new(Experiment::default_for(name)?),
    };
    if cfg.experiment.name() != name {
        return Err(Error::Config(format!(
            "config describes {:?} but the subcommand is {name:?}",
            cfg.experiment.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let (name, args) = match &cli.command {
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(config)?;
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            println!("config_hash {}", cfg.hash()?);
            return Ok(());
        }
        Command::Schedule(a) => ("schedule", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Rates(a) => ("rates", a),
        Command::Evolve(a) => ("evolve", a),
        Command::PVsH1(a) => ("p-vs-h1", a),
        Command::PVsT(a) => ("p-vs-t", a),
        Command::Svmc(a) => ("svmc", a),
        Command::Kramer(a) => ("kramer", a),
        Command::Instanton(a) => ("instanton", a),
        Command::Glass(a) => ("glass", a),
        Command::Lamb(a) => ("lamb", a),
    };
    let cfg = load(name, args)?;
    let report = run_experiment(&cfg, &args.out, args.threads)?;
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    eprintln!(
        "wrote {} files to {} in {:.1} s",
        report.manifest.outputs.len(),
        report.out_dir.display(),
        report.manifest.wall_time_s
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_report(&e));
            if matches!(e, Error::Config(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
