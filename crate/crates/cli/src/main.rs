//! `nlu-forge` — single entry point for the corpus-bootstrapping pipeline:
//! generate → paraphrase → embed → train → evaluate → stats → predict.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlu_forge::error::Error;
use nlu_forge::exec::configure_thread_pool;

use config::LoadedConfig;

#[derive(Parser)]
#[command(
    name = "nlu-forge",
    version,
    about = "Bootstraps slot-filling and intent-classification models from templates and terminologies"
)]
struct Cli {
    /// Project configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the seed of the command's config section.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 1 = fully deterministic mode.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the template pack and generate train/dev corpora.
    Generate {
        /// Use this pack for the training corpus instead of splitting
        /// (e.g. a paraphrased pack). Requires --dev-pack.
        #[arg(long)]
        train_pack: Option<PathBuf>,
        /// Pack for the dev corpus; paired with --train-pack.
        #[arg(long)]
        dev_pack: Option<PathBuf>,
    },
    /// Paraphrase template packs through pivot translation.
    Paraphrase,
    /// Train subword skip-gram embeddings on unlabeled text.
    Embed,
    /// Train the slot tagger (CRF or biLSTM).
    TrainSlots,
    /// Train the intent classifier.
    TrainIntents,
    /// Score the slot and intent models with repeated k-fold intervals.
    Evaluate,
    /// Corpus statistics (vocabulary, mentions, perplexity).
    Stats {
        /// Corpus to analyze (default: paths.test_corpus).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Emit JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Tag and classify utterances (one per line, file or stdin), JSONL out.
    Predict {
        /// Input file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn category(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Config(_) => ("config", 1),
        Error::Parse { .. }
        | Error::Schema(_)
        | Error::Data(_)
        | Error::Template { .. }
        | Error::Exhausted { .. } => ("data", 2),
        Error::Io { .. } => ("io", 3),
        Error::Backend { .. } => ("backend", 3),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let cfg = LoadedConfig::load(config_path)?;
    configure_thread_pool(cli.threads);

    match cli.command {
        Command::Generate { train_pack, dev_pack } => {
            commands::cmd_generate(&cfg, cli.seed, cli.threads, train_pack, dev_pack)
        }
        Command::Paraphrase => commands::cmd_paraphrase(&cfg, cli.seed, cli.threads),
        Command::Embed => commands::cmd_embed(&cfg, cli.seed, cli.threads),
        Command::TrainSlots => commands::cmd_train_slots(&cfg, cli.seed, cli.threads),
        Command::TrainIntents => commands::cmd_train_intents(&cfg, cli.seed, cli.threads),
        Command::Evaluate => commands::cmd_evaluate(&cfg, cli.seed, cli.threads),
        Command::Stats { corpus, json } => commands::cmd_stats(&cfg, corpus, json),
        Command::Predict { input } => commands::cmd_predict(&cfg, input),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (cat, code) = category(&e);
            eprintln!("nlu-forge: error[{cat}]: {e}");
            ExitCode::from(code)
        }
    }
}
