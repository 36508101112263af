//! `ffc`: generate planted datasets, train small models, attribute
//! predictions in the Fourier domain, play the deletion game, sweep
//! rectification hyperparameters, and analyze or act on the scores.
//!
//! Every run resolves its configuration as flags over config-file entries
//! over defaults, validates referenced paths up front, and embeds the
//! resolved key→value record (seed included) in each JSON report. Payload
//! sections are byte-identical across reruns with the same config; wall
//! times live in a separate meta section.

mod commands;
mod config;
mod error;
mod methods;
mod pgm;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{default_out_dir, load_config_file, Resolver};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "ffc",
    version,
    about = "Fourier-domain attribution toolkit for small neural networks"
)]
struct Cli {
    /// Flat key=value config file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $FFC_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for sample-parallel stages. Aggregation is
    /// order-fixed, so results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-frequency dataset (train + eval splits).
    DatasetGen(commands::dataset_gen::DatasetGenArgs),
    /// Train a model; writes a checkpoint and a metrics report.
    Train(commands::train::TrainArgs),
    /// Compute importance maps per (sample, method) plus a manifest.
    Attribute(commands::attribute::AttributeArgs),
    /// Play the deletion game over attributed maps.
    Game(commands::game::GameArgs),
    /// Grid-sweep rectification hyperparameters (loss and AUC per cell).
    Sweep(commands::sweep::SweepArgs),
    /// Summarize score characteristics (kurtosis, class specificity).
    Analyze(commands::analyze::AnalyzeArgs),
    /// Delete top-scored components to flip misclassified predictions.
    Correct(commands::correct::CorrectArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DatasetGen(_) => "dataset-gen",
            Command::Train(_) => "train",
            Command::Attribute(_) => "attribute",
            Command::Game(_) => "game",
            Command::Sweep(_) => "sweep",
            Command::Analyze(_) => "analyze",
            Command::Correct(_) => "correct",
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => load_config_file(path)?,
        None => Default::default(),
    };
    let mut resolver = Resolver::new(file);
    let out_dir = PathBuf::from(resolver.value(
        "out_dir",
        cli.out_dir.map(|p| p.display().to_string()),
        default_out_dir().display().to_string(),
    )?);
    let workers = resolver.value("workers", cli.workers, 1usize)?;
    if workers == 0 {
        return Err(error::CliError::usage("workers must be positive"));
    }
    // The global pool is built once per process; later calls fail, which
    // only happens in tests driving `run` twice.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    resolver.note("subcommand", cli.command.name());

    match cli.command {
        Command::DatasetGen(args) => commands::dataset_gen::run(args, resolver, &out_dir),
        Command::Train(args) => commands::train::run(args, resolver, &out_dir),
        Command::Attribute(args) => commands::attribute::run(args, resolver, &out_dir),
        Command::Game(args) => commands::game::run(args, resolver, &out_dir),
        Command::Sweep(args) => commands::sweep::run(args, resolver, &out_dir),
        Command::Analyze(args) => commands::analyze::run(args, resolver, &out_dir),
        Command::Correct(args) => commands::correct::run(args, resolver, &out_dir),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
