//! Synthetic distributions and baseline detectors.
//!
//! Three generator families: the terminal-token construction used to compare
//! the graph detector against context-limited sequential baselines, a
//! planted-motif corpus whose only class signal is one token pair, and a
//! trivially separable disjoint-vocabulary corpus. All generators derive one
//! RNG per document from (seed, doc index), so parallel generation cannot
//! change output and regenerated corpora are byte-identical.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_corpus, Corpus, Split};
use crate::error::{Error, Result};
use crate::gcn::{self, TrainConfig};
use crate::graph::{build_graph, count_cooccurrence};

fn doc_rng(seed: u64, index: u64) -> ChaCha8Rng {
    // splitmix-style spread keeps per-document streams independent.
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Sequences whose first `length - 1` tokens are iid uniform over a
/// background alphabet and whose terminal token is fixed by the class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceDistribution {
    pub background: Vec<String>,
    pub length: usize,
    pub terminal_human: String,
    pub terminal_machine: String,
}

impl Default for SequenceDistribution {
    fn default() -> Self {
        Self {
            background: vec!["a".into(), "b".into()],
            length: 50,
            terminal_human: "a".into(),
            terminal_machine: "b".into(),
        }
    }
}

impl SequenceDistribution {
    /// Background alphabet disjoint from the terminal tokens, which makes the
    /// terminal token a class-exclusive graph neighbor.
    pub fn with_marker_terminals(length: usize) -> Self {
        Self {
            background: vec!["c".into(), "d".into()],
            length,
            terminal_human: "a".into(),
            terminal_machine: "b".into(),
        }
    }

    fn sample_doc(&self, class: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let mut toks = Vec::with_capacity(self.length);
        for _ in 0..self.length - 1 {
            let pick = rng.gen_range(0..self.background.len());
            toks.push(self.background[pick].clone());
        }
        toks.push(if class == 0 {
            self.terminal_human.clone()
        } else {
            self.terminal_machine.clone()
        });
        toks
    }
}

/// Balanced labeled corpus from the terminal-token construction: human docs
/// first, then machine docs, all tagged train.
pub fn sample_terminal_corpus(dist: &SequenceDistribution, n_per_class: usize, seed: u64) -> Result<Corpus> {
    sample_terminal_corpus_split(dist, n_per_class, 0, seed)
}

/// Same construction with an additional balanced test split.
pub fn sample_terminal_corpus_split(
    dist: &SequenceDistribution,
    n_train_per_class: usize,
    n_test_per_class: usize,
    seed: u64,
) -> Result<Corpus> {
    if dist.length < 2 {
        return Err(Error::InvalidConfig("sequence length must be >= 2".into()));
    }
    let mut token_docs = Vec::new();
    let mut labels = Vec::new();
    let mut splits = Vec::new();
    let mut index = 0u64;
    for (count, split) in [(n_train_per_class, Split::Train), (n_test_per_class, Split::Test)] {
        for class in 0..2usize {
            for _ in 0..count {
                let mut rng = doc_rng(seed, index);
                token_docs.push(dist.sample_doc(class, &mut rng));
                labels.push(class);
                splits.push(split);
                index += 1;
            }
        }
    }
    build_corpus(
        token_docs,
        labels,
        splits,
        vec!["human".into(), "machine".into()],
        1,
    )
}

/// How the sequential baseline scores a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EsbMode {
    /// Markov contexts of up to `context - 1` previous tokens, scored over
    /// the whole sequence.
    Sliding,
    /// Full-prefix conditionals for the first `context` positions only; the
    /// tail of the sequence is never scored.
    Truncated,
}

/// Context-limited sequential detector: per-class empirical conditional
/// tables with add-one smoothing, classified by plug-in likelihood ratio
/// (ties go to human).
#[derive(Debug, Clone)]
pub struct EsbDetector {
    pub context: usize,
    pub mode: EsbMode,
    fitted: bool,
    vocab: HashMap<String, u32>,
    /// (class, context tuple) -> next-token counts.
    tables: Vec<HashMap<Vec<u32>, HashMap<u32, u64>>>,
}

impl EsbDetector {
    pub fn new(context: usize, mode: EsbMode) -> Self {
        Self {
            context: context.max(1),
            mode,
            fitted: false,
            vocab: HashMap::new(),
            tables: vec![HashMap::new(), HashMap::new()],
        }
    }

    /// Token id, extending the vocabulary during fitting.
    fn id_mut(&mut self, tok: &str) -> u32 {
        let next = self.vocab.len() as u32;
        *self.vocab.entry(tok.to_string()).or_insert(next)
    }

    fn id(&self, tok: &str) -> Option<u32> {
        self.vocab.get(tok).copied()
    }

    fn context_of(&self, seq: &[u32], t: usize) -> Vec<u32> {
        let lo = match self.mode {
            EsbMode::Sliding => t.saturating_sub(self.context - 1),
            // Within the scored prefix the full history fits the window.
            EsbMode::Truncated => 0,
        };
        seq[lo..t].to_vec()
    }

    fn scored_positions(&self, len: usize) -> usize {
        match self.mode {
            EsbMode::Sliding => len,
            EsbMode::Truncated => self.context.min(len),
        }
    }

    pub fn fit(&mut self, docs: &[(Vec<String>, usize)]) {
        for (toks, class) in docs {
            let ids: Vec<u32> = toks.iter().map(|t| self.id_mut(t)).collect();
            let upto = self.scored_positions(ids.len());
            for t in 0..upto {
                let ctx = self.context_of(&ids, t);
                *self.tables[*class]
                    .entry(ctx)
                    .or_default()
                    .entry(ids[t])
                    .or_insert(0) += 1;
            }
        }
        self.fitted = true;
    }

    /// Log add-one-smoothed conditional probability.
    fn log_prob(&self, class: usize, ctx: &[u32], next: Option<u32>) -> f64 {
        let v = self.vocab.len() as f64 + 1.0; // one extra slot for unseen tokens
        let (ctx_total, hit) = match self.tables[class].get(ctx) {
            Some(nexts) => {
                let total: u64 = nexts.values().sum();
                let hit = next.and_then(|n| nexts.get(&n).copied()).unwrap_or(0);
                (total, hit)
            }
            None => (0, 0),
        };
        (((hit + 1) as f64) / (ctx_total as f64 + v)).ln()
    }

    pub fn classify(&self, tokens: &[String]) -> Result<usize> {
        if !self.fitted {
            return Err(Error::UnfittedDetector);
        }
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        let ids: Vec<Option<u32>> = tokens.iter().map(|t| self.id(t)).collect();
        let known: Vec<u32> = ids.iter().map(|i| i.unwrap_or(u32::MAX)).collect();
        let upto = self.scored_positions(tokens.len());
        let mut ll = [0.0f64; 2];
        for t in 0..upto {
            let ctx = self.context_of(&known, t);
            for class in 0..2 {
                ll[class] += self.log_prob(class, &ctx, ids[t]);
            }
        }
        // Ties go to human (class 0).
        Ok(if ll[1] > ll[0] { 1 } else { 0 })
    }

    pub fn accuracy(&self, docs: &[(Vec<String>, usize)]) -> Result<f64> {
        let mut hit = 0usize;
        for (toks, class) in docs {
            if self.classify(toks)? == *class {
                hit += 1;
            }
        }
        Ok(hit as f64 / docs.len() as f64)
    }
}

/// Classify one sequence with a fitted detector.
pub fn esb_classify(detector: &EsbDetector, tokens: &[String]) -> Result<usize> {
    detector.classify(tokens)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub length: usize,
    pub context: usize,
    pub n_per_class: usize,
    pub seed: u64,
    pub esb_accuracy: f64,
    pub pgb_accuracy: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub length: usize,
    pub context: usize,
    pub n_per_class: usize,
    pub test_per_class: usize,
    pub esb_mode: EsbMode,
    pub train: TrainConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            length: 50,
            context: 3,
            n_per_class: 1000,
            test_per_class: 200,
            // The sequential-detector class under comparison only models the
            // first `context` positions; a full-sequence scan would read the
            // class-exclusive terminal token and leave nothing to compare.
            esb_mode: EsbMode::Truncated,
            train: TrainConfig {
                epochs: 400,
                ..Default::default()
            },
        }
    }
}

/// Fits the sequential baseline and the graph pipeline on identical training
/// data and evaluates both on a held-out balanced test split.
pub fn run_detector_comparison(config: &ComparisonConfig, seed: u64) -> Result<ComparisonReport> {
    let dist = SequenceDistribution::with_marker_terminals(config.length);
    let corpus = sample_terminal_corpus_split(&dist, config.n_per_class, config.test_per_class, seed)?;

    let as_strings = |split: Split| -> Vec<(Vec<String>, usize)> {
        corpus
            .docs_in(split)
            .map(|d| {
                let toks = d
                    .tokens
                    .iter()
                    .map(|&t| corpus.vocabulary.token(t).to_string())
                    .collect();
                (toks, d.label.unwrap())
            })
            .collect()
    };
    let train_docs = as_strings(Split::Train);
    let test_docs = as_strings(Split::Test);

    let mut esb = EsbDetector::new(config.context, config.esb_mode);
    esb.fit(&train_docs);
    let esb_accuracy = esb.accuracy(&test_docs)?;

    let stats = count_cooccurrence(&corpus, 3)?;
    let graph = build_graph(&corpus, &stats)?;
    let mut train_config = config.train.clone();
    train_config.seed = seed;
    let outcome = gcn::train(&graph, &corpus, &train_config)?;
    let pgb_accuracy = gcn::test_accuracy(&graph, &outcome.model, &corpus)?;

    Ok(ComparisonReport {
        length: config.length,
        context: config.context,
        n_per_class: config.n_per_class,
        seed,
        esb_accuracy,
        pgb_accuracy,
        degenerate: config.context >= config.length,
    })
}

/// Planted-motif corpus: machine documents contain the pair tokens adjacent,
/// human documents contain exactly one of them, backgrounds are iid uniform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedMotifSpec {
    pub background_vocab: usize,
    /// Background tokens per document (the planted insert adds 1-2 more).
    pub doc_len: usize,
    pub pair: (String, String),
}

impl Default for PlantedMotifSpec {
    fn default() -> Self {
        Self {
            background_vocab: 300,
            doc_len: 15,
            pair: ("p".into(), "q".into()),
        }
    }
}

impl PlantedMotifSpec {
    fn background_token(&self, i: usize) -> String {
        format!("w{i:04}")
    }
}

/// 80/20 train/test split per class; human docs first within each split.
pub fn sample_planted(spec: &PlantedMotifSpec, n_per_class: usize, seed: u64) -> Result<Corpus> {
    if spec.background_vocab < 4 {
        return Err(Error::InvalidConfig(
            "background vocabulary must be >= 4".into(),
        ));
    }
    let n_test = (n_per_class / 5).max(1).min(n_per_class);
    let n_train = n_per_class - n_test;

    let mut token_docs = Vec::new();
    let mut labels = Vec::new();
    let mut splits = Vec::new();
    let mut index = 0u64;
    for (count, split) in [(n_train, Split::Train), (n_test, Split::Test)] {
        for class in 0..2usize {
            for _ in 0..count {
                let mut rng = doc_rng(seed, index);
                let mut toks: Vec<String> = (0..spec.doc_len)
                    .map(|_| spec.background_token(rng.gen_range(0..spec.background_vocab)))
                    .collect();
                let at = rng.gen_range(0..=toks.len());
                if class == 1 {
                    // Machine: the pair, adjacent.
                    toks.insert(at, spec.pair.1.clone());
                    toks.insert(at, spec.pair.0.clone());
                } else {
                    // Human: exactly one of the pair.
                    let pick = if rng.gen_bool(0.5) {
                        spec.pair.0.clone()
                    } else {
                        spec.pair.1.clone()
                    };
                    toks.insert(at, pick);
                }
                token_docs.push(toks);
                labels.push(class);
                splits.push(split);
                index += 1;
            }
        }
    }
    build_corpus(
        token_docs,
        labels,
        splits,
        vec!["human".into(), "machine".into()],
        1,
    )
}

/// Linearly separable corpus: each class draws from its own disjoint
/// vocabulary. 80/20 train/test split per class.
pub fn sample_separable(
    vocab_per_class: usize,
    doc_len: usize,
    n_per_class: usize,
    seed: u64,
) -> Result<Corpus> {
    let n_test = (n_per_class / 5).max(1).min(n_per_class);
    let n_train = n_per_class - n_test;
    let mut token_docs = Vec::new();
    let mut labels = Vec::new();
    let mut splits = Vec::new();
    let mut index = 0u64;
    for (count, split) in [(n_train, Split::Train), (n_test, Split::Test)] {
        for class in 0..2usize {
            for _ in 0..count {
                let mut rng = doc_rng(seed, index);
                let toks: Vec<String> = (0..doc_len)
                    .map(|_| format!("c{class}t{:03}", rng.gen_range(0..vocab_per_class)))
                    .collect();
                token_docs.push(toks);
                labels.push(class);
                splits.push(split);
                index += 1;
            }
        }
    }
    build_corpus(
        token_docs,
        labels,
        splits,
        vec!["human".into(), "machine".into()],
        1,
    )
}

/// Renders a generated corpus in the same JSON-lines shape the ingestion
/// side reads, one record per document with text, label, and split fields.
pub fn corpus_to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in &corpus.documents {
        let text: Vec<&str> = doc
            .tokens
            .iter()
            .map(|&t| corpus.vocabulary.token(t))
            .collect();
        let split = match doc.split {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        };
        let record = serde_json::json!({
            "text": text.join(" "),
            "label": corpus.class_names[doc.label.unwrap_or(0)],
            "split": split,
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}
