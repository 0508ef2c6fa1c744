use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },

    #[error("line {line}: invalid field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },

    #[error("invalid message `{id}`: {message}")]
    InvalidMessage { id: String, message: String },

    #[error("no tag source: tagger is untrained and token `{token}` carries no tag")]
    NoTagSource { token: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("token `{token}` in message `{id}` has no gold POS tag")]
    UntaggedToken { id: String, token: String },

    #[error("message `{id}` has not been segmented into discourse arguments")]
    Unsegmented { id: String },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty argument list")]
    EmptyArguments,

    #[error("unalignable gold span in message `{id}`")]
    UnalignableSpan { id: String },

    #[error("message `{id}` lacks a gold label: {what}")]
    MissingGold { id: String, what: String },

    #[error("zero variance")]
    ZeroVariance,

    #[error("non-positive prior for `{term}`")]
    NonPositivePrior { term: String },

    #[error("embedding file line {line}: {message}")]
    Embedding { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corrupt model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("embedding table does not match the model: {0}")]
    EmbeddingMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(line: usize, field: &str, message: impl Into<String>) -> Self {
        Error::Schema {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}
