mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hsol_core::config::ConfigError;

use crate::commands::UsageError;

/// Hate speech / offensive language / neither tweet classifier.
#[derive(Debug, Parser)]
#[command(name = "hsol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a labeled corpus and print class prevalence statistics.
    Ingest {
        /// Corpus CSV.
        corpus: PathBuf,
        /// Also write the statistics as CSV to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train a part-of-speech tagger from a CoNLL-style file (word TAB tag).
    TaggerTrain {
        treebank: PathBuf,
        /// Where to write the tagger model.
        #[arg(short, long)]
        output: PathBuf,
        /// Training passes; defaults to `tagger_epochs` from the config, else 5.
        #[arg(long)]
        epochs: Option<usize>,
        /// Shuffle seed; defaults to `seed` from the config, else 42.
        #[arg(long)]
        seed: Option<u64>,
        /// Optional pipeline configuration supplying the defaults above.
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Fit the configured model and write model.json plus a training report.
    Train(ConfigArgs),
    /// Holdout split, cross-validated grid search, refit and reports.
    Evaluate(ConfigArgs),
    /// Classify one text per line, writing `label TAB hate TAB offensive TAB neither`.
    Predict {
        /// Model file written by `train`.
        #[arg(short, long)]
        model: PathBuf,
        /// Input file; standard input when omitted.
        input: Option<PathBuf>,
    },
    /// Error buckets and top weights of a trained model on the configured corpus.
    Report {
        #[command(flatten)]
        config: ConfigArgs,
        /// Model file; defaults to model.json in the output directory.
        #[arg(short, long)]
        model: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// Pipeline configuration file (flat `key = value`).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { corpus, csv } => commands::ingest(&corpus, csv.as_deref()),
        Command::TaggerTrain {
            treebank,
            output,
            epochs,
            seed,
            config,
        } => {
            let defaults = match config {
                Some(c) => commands::load_config(&c, None)?,
                None => Default::default(),
            };
            let epochs = epochs.unwrap_or(defaults.tagger_epochs);
            commands::tagger_train(&treebank, &output, epochs, seed.unwrap_or(defaults.seed))
        }
        Command::Train(a) => commands::train(&commands::load_config(&a.config, a.out.as_deref())?),
        Command::Evaluate(a) => {
            commands::evaluate(&commands::load_config(&a.config, a.out.as_deref())?)
        }
        Command::Predict { model, input } => commands::predict(&model, input.as_deref()),
        Command::Report { config, model } => {
            let cfg = commands::load_config(&config.config, config.out.as_deref())?;
            commands::report(&cfg, model.as_deref())
        }
    }
}

/// 2 for usage and configuration problems, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|e| {
        e.downcast_ref::<UsageError>().is_some() || e.downcast_ref::<ConfigError>().is_some()
    });
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
