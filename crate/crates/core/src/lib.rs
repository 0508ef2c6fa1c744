//! Causal explanation analysis for social-media messages.

pub mod corpus;
pub mod error;

pub use corpus::{Corpus, Message, PosTagger, Split, Tag, Token};
pub use error::{Error, Result};
pub mod segmenter;

pub use segmenter::{segment, ConnectiveLexicon, DiscourseArgument};
pub mod features;

pub use features::{FeatureSpace, FeatureVector, SentimentLexicon};
pub mod linsvm;

pub use linsvm::{LinearModel, SvmConfig};
pub mod neural;
pub use neural::{EmbeddingTable, NeuralExample, NeuralModel, Task, TrainConfig, Variant};
pub mod pipeline;
pub use pipeline::{
    derive_cei_gold, evaluate, mcnemar, run_pipeline, train_pipeline, train_pipeline_with, EvalReport, PipelineMode,
    PipelineModel, RunConfig,
};
pub mod model_file;
pub use model_file::{load_model, save_model};
pub mod synth;
pub mod analysis;
pub use analysis::{cause_word_report, cohens_d, cp_ratio_table, log_odds_dirichlet, pearson_r, LogOddsResult, UserStats};
