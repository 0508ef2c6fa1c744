//! Run configuration: defaults, then an optional TOML file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use causex::neural::{Optimizer, Variant};
use causex::pipeline::{CeiTraining, PipelineMode};
use causex::RunConfig;

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any RunConfig field; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to the embedding dimension.
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// adam or sgd.
    #[arg(long)]
    pub optimizer: Option<Optimizer>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// full, word_only or da_avg.
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub alpha_fwe: Option<f64>,
    #[arg(long)]
    pub min_doc_count: Option<usize>,
    #[arg(long)]
    pub svm_lambda: Option<f64>,
    #[arg(long)]
    pub svm_epochs: Option<usize>,
    #[arg(long)]
    pub tagger_epochs: Option<usize>,
    /// causal_only or all.
    #[arg(long)]
    pub cei_training: Option<CeiTraining>,
    /// two_stage or cei_only.
    #[arg(long)]
    pub mode: Option<PipelineMode>,
}

fn known_keys() -> Vec<String> {
    match serde_json::to_value(RunConfig::default()) {
        Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

pub fn read_config_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let known = known_keys();
    // hidden_dim and clip_norm serialize as null by default but are valid keys.
    if let Some(k) = table.keys().find(|k| !known.contains(k)) {
        bail!("{}: unknown config key `{k}`", path.display());
    }
    toml::Value::Table(table)
        .try_into()
        .with_context(|| format!("invalid config in {}", path.display()))
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => read_config_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$flag { c.$field = v; })*
            };
        }
        set!(
            seed => seed,
            dropout => dropout_p,
            optimizer => optimizer,
            learning_rate => learning_rate,
            epochs => epochs,
            patience => patience,
            variant => variant,
            alpha_fwe => alpha_fwe,
            min_doc_count => min_doc_count,
            svm_lambda => svm_lambda,
            svm_epochs => svm_epochs,
            tagger_epochs => tagger_epochs,
            cei_training => cei_training_mode,
            mode => pipeline_mode,
        );
        if self.hidden_dim.is_some() {
            c.hidden_dim = self.hidden_dim;
        }
        if self.clip_norm.is_some() {
            c.clip_norm = self.clip_norm;
        }
        c.validate()?;
        Ok(c)
    }
}
