use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use causex::features::SentimentLexicon;
use causex::segmenter::ConnectiveLexicon;
use causex::{save_model, train_pipeline_with};

use crate::config::RunArgs;
use crate::io::{load_corpus, load_embeddings};
use crate::predict::metrics_table;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// POS-tagged, labeled JSONL corpus.
    #[arg(long)]
    pub train: PathBuf,
    /// Used for early stopping and the printed metrics.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// GloVe-style text file.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Inferred from the embeddings file when absent.
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Lines of `word<TAB>positive|negative`.
    #[arg(long)]
    pub sentiment: Option<PathBuf>,
    /// Write the training report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let config = args.run.resolve()?;
    eprintln!("seed: {}", config.seed);
    let train = load_corpus(&args.train)?;
    let validation = args.validation.as_deref().map(load_corpus).transpose()?;
    let embeddings = load_embeddings(&args.embeddings, args.embedding_dim)?;
    let lexicon = match &args.lexicon {
        Some(p) => ConnectiveLexicon::load(p)?,
        None => ConnectiveLexicon::default(),
    };
    let sentiment = match &args.sentiment {
        Some(p) => SentimentLexicon::load(p)?,
        None => SentimentLexicon::default(),
    };
    let (model, report) =
        train_pipeline_with(&config, &train, validation.as_ref(), embeddings, lexicon, sentiment)?;
    save_model(&model, &args.output).with_context(|| format!("writing {}", args.output.display()))?;

    println!("messages {}", report.train_messages);
    println!("features {} seen, {} selected", report.features_seen, report.features_selected);
    println!(
        "CEI examples {} ({} unalignable), loss {:.4} -> {:.4}, best epoch {}",
        report.cei_examples,
        report.cei_unalignable,
        report.cei_initial_loss,
        report.cei_losses.last().copied().unwrap_or(report.cei_initial_loss),
        report.cei_best_epoch
    );
    if let Some(v) = &report.validation {
        println!("{}", metrics_table("CP", &v.cp));
        println!("{}", metrics_table("CEI", &v.cei));
    }
    if let Some(p) = &args.report {
        std::fs::write(p, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    println!("model written to {}", args.output.display());
    Ok(())
}
