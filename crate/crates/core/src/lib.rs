//! Machine-generated-text detection over token/document co-occurrence graphs.
//!
//! The pipeline has three stages: build a text graph from a tokenized corpus
//! (PMI-gated token-token edges, containment token-doc edges), train a
//! two-layer graph convolutional detector over document nodes, and extract
//! edge-mask motifs that explain individual predictions. Deletion curves
//! (most/least relevant first) quantify how faithful those motifs are, and a
//! synthetic harness compares the graph detector against context-limited
//! sequential baselines.

pub mod corpus;
pub mod error;
pub mod explainer;
pub mod faithfulness;
pub mod gcn;
pub mod graph;
pub mod numeric;
pub mod synthetic;

pub use corpus::{Corpus, Document, IngestConfig, Split, Tokenizer, Vocabulary};
pub use error::{Error, Result};
pub use explainer::{EdgeMask, ExplainConfig, Granularity, Motif};
pub use faithfulness::{DeletionCurve, Protocol, RemovalScope};
pub use gcn::{GcnModel, Prediction, TrainConfig};
pub use graph::{CooccurrenceStats, Edge, EdgeKind, EdgeRef, GraphConfig, TextGraph};
pub use numeric::{AdamState, CsrMatrix, DenseMatrix};
pub use synthetic::{EsbDetector, EsbMode, PlantedMotifSpec, SequenceDistribution};
