//! CEI gold derivation, the two-stage CP → CEI composition, training of the
//! full bundle, and evaluation metrics.

mod metrics;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{tag_pos, tokenize, Corpus, Message, PosTagger};
use crate::error::{Error, Result};
use crate::features::{
    extract_with_config, FeatureConfig, FeatureFamily, FeatureSpace, FeatureVector, SentimentLexicon,
};
use crate::linsvm::{train_svm, LinearModel, SvmConfig};
use crate::neural::{
    train_neural, EmbeddingTable, NeuralExample, NeuralModel, Optimizer, Task, TrainConfig, Variant,
};
use crate::segmenter::{segment, ConnectiveLexicon, DiscourseArgument};

pub use metrics::{evaluate, mcnemar, mcnemar_counts, ClassReport, Confusion, EvalReport, McNemar};

/// Per-argument CEI labels with exactly one positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CeiGold {
    pub labels: Vec<bool>,
    pub chosen: usize,
}

/// Picks the argument whose raw-text byte range overlaps the gold explanation
/// span the most; ties go to the earliest argument.
pub fn derive_cei_gold(message: &Message, args: &[DiscourseArgument]) -> Result<CeiGold> {
    if message.gold_causality != Some(true) {
        return Err(Error::MissingGold {
            id: message.id.clone(),
            what: "causality=true".into(),
        });
    }
    let (gs, ge) = message.gold_explanation_span.ok_or_else(|| Error::MissingGold {
        id: message.id.clone(),
        what: "explanation_span".into(),
    })?;
    if args.is_empty() {
        return Err(Error::EmptyArguments);
    }
    let mut best = (0usize, 0usize);
    for (i, a) in args.iter().enumerate() {
        let (s, e) = a.byte_range(message);
        let overlap = e.min(ge).saturating_sub(s.max(gs));
        if overlap > best.1 {
            best = (i, overlap);
        }
    }
    if best.1 == 0 {
        return Err(Error::UnalignableSpan {
            id: message.id.clone(),
        });
    }
    let mut labels = vec![false; args.len()];
    labels[best.0] = true;
    Ok(CeiGold {
        labels,
        chosen: best.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    TwoStage,
    CeiOnly,
}

impl std::str::FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_stage" => Ok(PipelineMode::TwoStage),
            "cei_only" => Ok(PipelineMode::CeiOnly),
            other => Err(Error::InvalidParameter(format!("unknown pipeline mode `{other}`"))),
        }
    }
}

/// Which training messages the CEI model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeiTraining {
    CausalOnly,
    All,
}

impl std::str::FromStr for CeiTraining {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "causal_only" => Ok(CeiTraining::CausalOnly),
            "all" => Ok(CeiTraining::All),
            other => Err(Error::InvalidParameter(format!("unknown CEI training mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub hidden_dim: Option<usize>,
    pub dropout_p: f64,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub clip_norm: Option<f64>,
    pub variant: Variant,
    pub alpha_fwe: f64,
    pub min_doc_count: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub tagger_epochs: usize,
    pub cei_training_mode: CeiTraining,
    pub pipeline_mode: PipelineMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let s = SvmConfig::default();
        RunConfig {
            seed: 13,
            hidden_dim: None,
            dropout_p: t.dropout_p,
            optimizer: t.optimizer,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            patience: t.patience,
            clip_norm: None,
            variant: Variant::Full,
            alpha_fwe: 60.0,
            min_doc_count: 2,
            svm_lambda: s.lambda,
            svm_epochs: s.epochs,
            tagger_epochs: 5,
            cei_training_mode: CeiTraining::CausalOnly,
            pipeline_mode: PipelineMode::TwoStage,
        }
    }
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed: self.seed,
            hidden_dim: self.hidden_dim,
            dropout_p: self.dropout_p,
            clip_norm: self.clip_norm,
            patience: self.patience,
        }
    }

    pub fn svm_config(&self) -> SvmConfig {
        SvmConfig {
            lambda: self.svm_lambda,
            epochs: self.svm_epochs,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        if !(self.alpha_fwe > 0.0) {
            return Err(Error::InvalidParameter("alpha_fwe must be positive".into()));
        }
        if self.min_doc_count == 0 {
            return Err(Error::InvalidParameter("min_doc_count must be >= 1".into()));
        }
        if !(self.svm_lambda > 0.0) || self.svm_epochs == 0 {
            return Err(Error::InvalidParameter(
                "svm_lambda must be positive and svm_epochs >= 1".into(),
            ));
        }
        if self.hidden_dim == Some(0) {
            return Err(Error::InvalidParameter("hidden_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Everything needed to run both stages on raw messages.
#[derive(Debug, Clone)]
pub struct PipelineModel {
    pub config: RunConfig,
    pub tagger: PosTagger,
    pub lexicon: ConnectiveLexicon,
    pub sentiment: SentimentLexicon,
    pub feature_config: FeatureConfig,
    pub cp: LinearModel,
    pub cei: NeuralModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// The message with tokens and POS tags filled in.
    pub message: Message,
    pub arguments: Vec<DiscourseArgument>,
    pub causal: bool,
    pub cp_margin: f64,
    pub explanations: Vec<bool>,
    pub cei_invoked: bool,
}

impl PipelineOutput {
    pub fn explanation_indices(&self) -> Vec<usize> {
        self.explanations
            .iter()
            .enumerate()
            .filter_map(|(i, &e)| e.then_some(i))
            .collect()
    }
}

impl PipelineModel {
    /// Tokenizes if needed, tags and segments.
    pub fn prepare(&self, message: &Message) -> Result<(Message, Vec<DiscourseArgument>)> {
        let mut m = message.clone();
        if m.tokens.is_empty() && !m.raw_text.trim().is_empty() {
            m.tokens = tokenize(&m.raw_text);
        }
        m.tokens = tag_pos(&m.tokens, &self.tagger)?;
        let args = segment(&m, &self.lexicon);
        Ok((m, args))
    }

    pub fn features(&self, message: &Message, args: &[DiscourseArgument]) -> Result<FeatureVector> {
        extract_with_config(message, args, &self.sentiment, &self.feature_config)
    }

    /// CEI labels by thresholding each argument at probability ½.
    pub fn cei_labels(&self, message: &Message, args: &[DiscourseArgument]) -> Result<Vec<bool>> {
        let words: Vec<Vec<String>> = args.iter().map(|a| a.words(message)).collect();
        Ok(self
            .cei
            .forward_words(&words, None)?
            .iter()
            .map(|lp| lp[0] > lp[1])
            .collect())
    }
}

/// Runs CP and, depending on `mode`, CEI on one message.
pub fn run_pipeline(message: &Message, model: &PipelineModel, mode: PipelineMode) -> Result<PipelineOutput> {
    let (message, arguments) = model.prepare(message)?;
    let fv = model.features(&message, &arguments)?;
    let (cp_positive, cp_margin) = model.cp.predict(&fv);
    let run_cei = !arguments.is_empty() && (mode == PipelineMode::CeiOnly || cp_positive);
    let explanations = if run_cei {
        model.cei_labels(&message, &arguments)?
    } else {
        vec![false; arguments.len()]
    };
    let causal = match mode {
        PipelineMode::TwoStage => cp_positive,
        PipelineMode::CeiOnly => explanations.iter().any(|&e| e),
    };
    Ok(PipelineOutput {
        message,
        arguments,
        causal,
        cp_margin,
        explanations,
        cei_invoked: run_cei,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEval {
    /// Message-level causality.
    pub cp: EvalReport,
    /// Argument-level explanation labels over every evaluated message.
    pub cei: EvalReport,
    pub messages: usize,
    pub cei_invocations: usize,
    /// Causal messages whose gold span matched no argument.
    pub unalignable: usize,
}

/// Scores `mode` on a gold-labeled corpus. Non-causal messages contribute
/// all-negative argument labels to the CEI report.
pub fn evaluate_pipeline(model: &PipelineModel, corpus: &Corpus, mode: PipelineMode) -> Result<PipelineEval> {
    let mut cp_pred = Vec::new();
    let mut cp_gold = Vec::new();
    let mut cei_pred = Vec::new();
    let mut cei_gold = Vec::new();
    let mut invocations = 0;
    let mut unalignable = 0;
    for m in corpus {
        let gold = m.gold_causality.ok_or_else(|| Error::MissingGold {
            id: m.id.clone(),
            what: "causality".into(),
        })?;
        let out = run_pipeline(m, model, mode)?;
        invocations += out.cei_invoked as usize;
        cp_pred.push(out.causal);
        cp_gold.push(gold);
        let labels = if gold {
            match derive_cei_gold(&out.message, &out.arguments) {
                Ok(g) => g.labels,
                Err(Error::UnalignableSpan { .. }) => {
                    unalignable += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            vec![false; out.arguments.len()]
        };
        cei_pred.extend_from_slice(&out.explanations);
        cei_gold.extend(labels);
    }
    if cp_pred.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(PipelineEval {
        cp: evaluate(&cp_pred, &cp_gold)?,
        cei: evaluate(&cei_pred, &cei_gold)?,
        messages: cp_pred.len(),
        cei_invocations: invocations,
        unalignable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_messages: usize,
    pub features_seen: usize,
    pub features_selected: usize,
    pub cei_examples: usize,
    pub cei_unalignable: usize,
    pub cei_initial_loss: f64,
    pub cei_losses: Vec<f64>,
    pub cei_validation_f1: Vec<f64>,
    pub cei_best_epoch: usize,
    pub validation: Option<PipelineEval>,
}

struct Prepared {
    message: Message,
    args: Vec<DiscourseArgument>,
    gold: bool,
}

fn prepare_all(model_parts: &PipelineModel, corpus: &Corpus) -> Result<Vec<Prepared>> {
    corpus
        .iter()
        .map(|m| {
            let gold = m.gold_causality.ok_or_else(|| Error::MissingGold {
                id: m.id.clone(),
                what: "causality".into(),
            })?;
            let (message, args) = model_parts.prepare(m)?;
            Ok(Prepared { message, args, gold })
        })
        .collect()
}

/// CEI examples; the count of unalignable causal messages is returned too.
fn cei_examples(data: &[Prepared], mode: CeiTraining) -> Result<(Vec<NeuralExample>, usize)> {
    let mut out = Vec::new();
    let mut unalignable = 0;
    for p in data {
        if p.args.is_empty() {
            continue;
        }
        let labels = if p.gold {
            match derive_cei_gold(&p.message, &p.args) {
                Ok(g) => g.labels,
                Err(Error::UnalignableSpan { .. }) => {
                    unalignable += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else if mode == CeiTraining::All {
            vec![false; p.args.len()]
        } else {
            continue;
        };
        out.push(NeuralExample::from_message(&p.message, &p.args, labels));
    }
    Ok((out, unalignable))
}

/// Trains the tagger, the CP linear model and the CEI network.
///
/// The training corpus must carry gold POS tags and causality labels, and
/// causal messages need explanation spans.
pub fn train_pipeline(
    config: &RunConfig,
    train: &Corpus,
    validation: Option<&Corpus>,
    embeddings: Arc<EmbeddingTable>,
) -> Result<(PipelineModel, TrainReport)> {
    train_pipeline_with(
        config,
        train,
        validation,
        embeddings,
        ConnectiveLexicon::default(),
        SentimentLexicon::default(),
    )
}

/// [`train_pipeline`] with caller-supplied connective and sentiment lexicons.
pub fn train_pipeline_with(
    config: &RunConfig,
    train: &Corpus,
    validation: Option<&Corpus>,
    embeddings: Arc<EmbeddingTable>,
    lexicon: ConnectiveLexicon,
    sentiment: SentimentLexicon,
) -> Result<(PipelineModel, TrainReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for m in train {
        if let Some(t) = m.tokens.iter().find(|t| t.pos.is_none()) {
            return Err(Error::UntaggedToken {
                id: m.id.clone(),
                token: t.text.clone(),
            });
        }
    }
    let tagger = PosTagger::train(train, config.tagger_epochs, config.seed)?;
    let hidden = config.hidden_dim.unwrap_or(embeddings.dim());
    let placeholder_cei = NeuralModel::new(
        Task::Cei,
        config.variant,
        embeddings,
        hidden,
        config.dropout_p,
        config.seed,
    )?;
    let mut model = PipelineModel {
        config: *config,
        tagger,
        lexicon,
        sentiment,
        feature_config: FeatureConfig::default(),
        cp: LinearModel::new(FeatureSpace::default(), Vec::new(), 0.0, config.svm_lambda)?,
        cei: placeholder_cei,
    };

    let data = prepare_all(&model, train)?;
    let x: Vec<FeatureVector> = data
        .iter()
        .map(|p| model.features(&p.message, &p.args))
        .collect::<Result<_>>()?;
    let y: Vec<bool> = data.iter().map(|p| p.gold).collect();
    let mut space = FeatureSpace::fit(&x);
    let features_seen = space.len();
    space.filter_low_frequency(FeatureFamily::WordPair, config.min_doc_count);
    let space = space.select_univariate(&x, &y, config.alpha_fwe)?;
    model.cp = train_svm(&x, &y, &space, &config.svm_config())?;

    let (train_ex, cei_unalignable) = cei_examples(&data, config.cei_training_mode)?;
    let val_ex = match validation {
        Some(v) => Some(cei_examples(&prepare_all(&model, v)?, config.cei_training_mode)?.0),
        None => None,
    };
    let outcome = train_neural(
        model.cei.clone(),
        &train_ex,
        val_ex.as_deref(),
        &config.train_config(),
    )?;
    model.cei = outcome.model;

    let validation = match validation {
        Some(v) => Some(evaluate_pipeline(&model, v, config.pipeline_mode)?),
        None => None,
    };
    let report = TrainReport {
        train_messages: train.len(),
        features_seen,
        features_selected: space.len(),
        cei_examples: train_ex.len(),
        cei_unalignable,
        cei_initial_loss: outcome.initial_loss,
        cei_losses: outcome.losses,
        cei_validation_f1: outcome.validation_f1,
        cei_best_epoch: outcome.best_epoch,
        validation,
    };
    Ok((model, report))
}
