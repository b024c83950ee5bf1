use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown record format `{0}` (expected csv, tsv or jsonl)")]
    UnknownFormat(String),

    #[error("malformed input in {path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("document `{0}` has no title, abstract or keywords")]
    EmptyDocument(String),

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("label `{0}` is not in the label space")]
    UnknownLabel(String),

    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("document `{doc_id}` has no usable text for scenario {scenario}")]
    UnusableDocument { doc_id: String, scenario: String },

    #[error("cannot encode empty text")]
    EmptyText,

    #[error("max_len must be at least 3, got {0}")]
    MaxLenTooSmall(usize),

    #[error("batch is empty")]
    EmptyBatch,

    #[error("example was encoded with tokenizer `{found}`, backend expects `{expected}`")]
    TokenizerMismatch { expected: String, found: String },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("model `{0}` contributed more than one prediction for the same document")]
    DuplicateModel(String),

    #[error("prediction for `{found}` mixed into vote for `{expected}`")]
    MismatchedDocument { expected: String, found: String },

    #[error("document `{doc_id}` is missing a prediction from model `{model_id}`")]
    MissingPrediction { doc_id: String, model_id: String },

    #[error("document `{0}` has no query class")]
    MissingQueryClass(String),

    #[error("length mismatch: {golds} gold labels vs {preds} predictions")]
    LengthMismatch { golds: usize, preds: usize },

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("training diverged at learning rate {lr:e} (non-finite loss)")]
    Divergence { lr: f64 },

    #[error("every learning rate diverged: {0:?}")]
    AllDiverged(Vec<f64>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing {what}: expected {path}")]
    MissingArtifact { what: String, path: PathBuf },

    #[error("artifact already exists: {0}")]
    ArtifactExists(PathBuf),

    #[error("unsupported backend adapter kind `{0}`")]
    UnsupportedAdapter(String),

    #[error("{0}")]
    Serialization(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status for the command-line driver. Each failure family
    /// maps to its own nonzero code.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidRatios(_) | Error::UnknownFormat(_) => 2,
            Error::MissingArtifact { .. } => 3,
            Error::ArtifactExists(_) => 4,
            Error::Io { .. } => 5,
            Error::Divergence { .. } | Error::AllDiverged(_) => 6,
            Error::Malformed { .. } | Error::Serialization(_) => 7,
            Error::UnsupportedAdapter(_) | Error::TokenizerMismatch { .. } => 8,
            _ => 9,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
