//! Declarative run configuration.
//!
//! One TOML file drives every command; flags only select the command, point
//! at the config, and override the seed or thread count. Missing sections
//! fall back to the library defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use graphmotif_core::corpus::{IngestConfig, SplitSpec, Tokenizer};
use graphmotif_core::explainer::{ExplainConfig, ExplainTarget};
use graphmotif_core::faithfulness::RemovalScope;
use graphmotif_core::gcn::{LossReduction, TrainConfig};
use graphmotif_core::graph::GraphConfig;
use graphmotif_core::synthetic::{EsbMode, ComparisonConfig};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub paths: PathsSection,
    #[serde(default)]
    pub tokenizer: TokenizerSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub explain: ExplainSection,
    #[serde(default)]
    pub faithfulness: FaithfulnessSection,
    #[serde(default)]
    pub synth: SynthSection,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TokenizerSection {
    /// "basic" or "wordpiece".
    pub mode: String,
    pub vocab_file: Option<PathBuf>,
    pub lowercase: bool,
}

impl Default for TokenizerSection {
    fn default() -> Self {
        Self {
            mode: "basic".into(),
            vocab_file: None,
            lowercase: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSection {
    pub min_freq: u64,
    /// "fractions" or "field".
    pub split: String,
    pub fractions: [f64; 3],
    pub classes: Option<Vec<String>>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            min_freq: 2,
            split: "fractions".into(),
            fractions: [0.8, 0.1, 0.1],
            classes: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSection {
    pub window: usize,
    pub directed: bool,
    pub weighted: bool,
    /// Force the JSON edge dump regardless of graph size.
    pub debug_json: bool,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            window: 3,
            directed: false,
            weighted: false,
            debug_json: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub hidden: usize,
    /// 0 disables early stopping.
    pub patience: usize,
    pub weight_decay: f64,
    /// "sum" or "mean".
    pub reduction: String,
    pub best_val: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            epochs: 5000,
            hidden: 64,
            patience: 0,
            weight_decay: 0.0,
            reduction: "sum".into(),
            best_val: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub size_penalty: f64,
    pub entropy_coeff: f64,
    pub word_level_ratio: f64,
    pub high_order_ratio: f64,
    pub global_ratio: f64,
    /// "prediction" or "label".
    pub target: String,
    /// Documents feeding global motifs: "test", "train", or "all".
    pub scope: String,
}

impl Default for ExplainSection {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            size_penalty: 0.01,
            entropy_coeff: 0.0,
            word_level_ratio: 0.20,
            high_order_ratio: 0.02,
            global_ratio: 0.0005,
            target: "prediction".into(),
            scope: "test".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaithfulnessSection {
    pub fractions: Vec<f64>,
    pub random_seeds: usize,
    /// "all" or "token-token".
    pub scope: String,
    /// Any subset of ["morf", "lerf"].
    pub protocols: Vec<String>,
}

impl Default for FaithfulnessSection {
    fn default() -> Self {
        Self {
            fractions: (0..10).map(|i| i as f64 / 10.0).collect(),
            random_seeds: 5,
            scope: "all".into(),
            protocols: vec!["morf".into(), "lerf".into()],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub length: usize,
    pub context: usize,
    pub n_per_class: usize,
    pub test_per_class: usize,
    pub seeds: usize,
    /// "truncated" or "sliding".
    pub esb_mode: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            length: 50,
            context: 3,
            n_per_class: 1000,
            test_per_class: 200,
            seeds: 5,
            esb_mode: "truncated".into(),
            epochs: 400,
            learning_rate: 5e-4,
            hidden: 64,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {path:?}: {e}")))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {path:?}: {e}")))?;
        Ok(config)
    }

    pub fn tokenizer(&self) -> Result<Tokenizer, CliError> {
        match self.tokenizer.mode.as_str() {
            "basic" => Ok(Tokenizer::Basic {
                lowercase: self.tokenizer.lowercase,
            }),
            "wordpiece" => {
                let path = self.tokenizer.vocab_file.as_ref().ok_or_else(|| {
                    CliError::Config("wordpiece mode needs tokenizer.vocab_file".into())
                })?;
                Tokenizer::wordpiece_from_file(path, self.tokenizer.lowercase)
                    .map_err(|e| CliError::Config(format!("cannot load vocab: {e}")))
            }
            other => Err(CliError::Config(format!("unknown tokenizer mode {other:?}"))),
        }
    }

    pub fn ingest(&self) -> Result<IngestConfig, CliError> {
        let split = match self.corpus.split.as_str() {
            "field" => SplitSpec::Field,
            "fractions" => SplitSpec::Fractions {
                train: self.corpus.fractions[0],
                val: self.corpus.fractions[1],
                test: self.corpus.fractions[2],
            },
            other => return Err(CliError::Config(format!("unknown split mode {other:?}"))),
        };
        Ok(IngestConfig {
            tokenizer: self.tokenizer()?,
            min_freq: self.corpus.min_freq,
            split,
            seed: self.seed,
            classes: self.corpus.classes.clone(),
        })
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            window: self.graph.window,
            directed: self.graph.directed,
            weighted: self.graph.weighted,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let reduction = match self.train.reduction.as_str() {
            "sum" => LossReduction::Sum,
            "mean" => LossReduction::Mean,
            other => {
                return Err(CliError::Config(format!(
                    "unknown loss reduction {other:?}"
                )))
            }
        };
        Ok(TrainConfig {
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            hidden: self.train.hidden,
            seed: self.seed,
            patience: (self.train.patience > 0).then_some(self.train.patience),
            weight_decay: self.train.weight_decay,
            reduction,
            best_val: self.train.best_val,
        })
    }

    pub fn explain_config(&self) -> Result<ExplainConfig, CliError> {
        let target = match self.explain.target.as_str() {
            "prediction" => ExplainTarget::Prediction,
            "label" => ExplainTarget::Label,
            other => {
                return Err(CliError::Config(format!(
                    "unknown explain target {other:?}"
                )))
            }
        };
        Ok(ExplainConfig {
            learning_rate: self.explain.learning_rate,
            epochs: self.explain.epochs,
            size_penalty: self.explain.size_penalty,
            entropy_coeff: self.explain.entropy_coeff,
            word_level_ratio: self.explain.word_level_ratio,
            high_order_ratio: self.explain.high_order_ratio,
            global_ratio: self.explain.global_ratio,
            seed: self.seed,
            target,
        })
    }

    pub fn removal_scope(&self) -> Result<RemovalScope, CliError> {
        match self.faithfulness.scope.as_str() {
            "all" => Ok(RemovalScope::All),
            "token-token" => Ok(RemovalScope::TokenTokenOnly),
            other => Err(CliError::Config(format!(
                "unknown faithfulness scope {other:?}"
            ))),
        }
    }

    pub fn comparison_config(&self) -> Result<ComparisonConfig, CliError> {
        let esb_mode = match self.synth.esb_mode.as_str() {
            "truncated" | "prefix" => EsbMode::Truncated,
            "sliding" => EsbMode::Sliding,
            other => return Err(CliError::Config(format!("unknown esb mode {other:?}"))),
        };
        Ok(ComparisonConfig {
            length: self.synth.length,
            context: self.synth.context,
            n_per_class: self.synth.n_per_class,
            test_per_class: self.synth.test_per_class,
            esb_mode,
            train: TrainConfig {
                learning_rate: self.synth.learning_rate,
                epochs: self.synth.epochs,
                hidden: self.synth.hidden,
                ..TrainConfig::default()
            },
        })
    }
}
