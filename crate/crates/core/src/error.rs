//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {context} ({left} vs {right})")]
    ShapeMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("non-finite gradient for parameter {param}")]
    NonFiniteGradient { param: String },

    #[error("no labeled training documents")]
    NoLabeledDocs,

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("unknown document id {id} (valid range 0..{n_docs})")]
    UnknownDoc { id: usize, n_docs: usize },

    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    #[error("node {node} is isolated (self-loop only)")]
    IsolatedNode { node: usize },

    #[error(
        "computational subgraph has {edges} edges, above the limit of {limit}; \
         use the gradient explainer instead"
    )]
    SubgraphTooLarge { edges: usize, limit: usize },

    #[error("mask collection is empty")]
    EmptyMaskSet,

    #[error("removal fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),

    #[error("document shares no vocabulary with the graph")]
    NoSharedVocabulary,

    #[error("detector has not been fitted")]
    UnfittedDetector,

    #[error("empty sequence")]
    EmptySequence,

    #[error("graph cache is invalid: {0}")]
    InvalidCache(String),
}
