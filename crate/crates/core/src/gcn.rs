//! Two-layer graph convolutional detector.
//!
//! Forward pass: H1 = relu(Â X W1), H = Â H1 W2, Z = softmax(H). Node
//! features are one-hot for tokens and zero for documents, so Â X is the
//! token-column slice of Â and W1 only stores token rows. The backward pass
//! is the closed-form chain rule through softmax cross-entropy; there is no
//! autodiff anywhere.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Split};
use crate::error::{Error, Result};
use crate::graph::TextGraph;
use crate::numeric::{adam_step, AdamState, DenseMatrix};

const CHECKPOINT_MAGIC: &[u8; 4] = b"GCKP";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossReduction {
    /// Plain sum of per-document cross-entropy terms.
    Sum,
    /// Mean over labeled training documents.
    Mean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub hidden: usize,
    pub seed: u64,
    /// Early stop after this many epochs without a validation-accuracy
    /// improvement. `None` runs every epoch.
    pub patience: Option<usize>,
    pub weight_decay: f64,
    pub reduction: LossReduction,
    /// Keep the best-validation-accuracy weights instead of the final epoch.
    pub best_val: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            epochs: 5000,
            hidden: 64,
            seed: 42,
            patience: None,
            weight_decay: 0.0,
            reduction: LossReduction::Sum,
            best_val: false,
        }
    }
}

/// The detector: W1 over token rows, W2 over hidden channels.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub n_tokens: usize,
    pub n_classes: usize,
    pub hidden: usize,
    pub seed: u64,
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
}

impl GcnModel {
    /// Glorot-uniform initialization from the run seed.
    pub fn init(n_tokens: usize, hidden: usize, n_classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            DenseMatrix::from_vec(rows, cols, data)
        };
        let w1 = glorot(n_tokens, hidden);
        let w2 = glorot(hidden, n_classes);
        Self {
            n_tokens,
            n_classes,
            hidden,
            seed,
            w1,
            w2,
        }
    }
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Pre-activation of the first layer (Â X W1).
    pub pre_hidden: DenseMatrix,
    /// relu(pre_hidden).
    pub hidden: DenseMatrix,
    /// Â hidden, kept for the W2 gradient.
    pub aggregated: DenseMatrix,
    /// Logits H.
    pub logits: DenseMatrix,
    /// Row-softmax probabilities Z.
    pub probs: DenseMatrix,
}

pub fn forward(graph: &TextGraph, model: &GcnModel) -> Result<Forward> {
    if model.n_tokens != graph.n_tokens {
        return Err(Error::ShapeMismatch {
            context: "forward",
            left: format!("model tokens {}", model.n_tokens),
            right: format!("graph tokens {}", graph.n_tokens),
        });
    }
    let a_hat = &graph.normalized;
    let pre_hidden = a_hat.spmm_col_prefix(graph.n_tokens, &model.w1)?;
    let mut hidden = pre_hidden.clone();
    hidden.relu_in_place();
    let aggregated = a_hat.spmm(&hidden)?;
    let logits = aggregated.matmul(&model.w2)?;
    let probs = logits.softmax_rows();
    Ok(Forward {
        pre_hidden,
        hidden,
        aggregated,
        logits,
        probs,
    })
}

/// Cross-entropy over labeled training documents plus analytic gradients.
pub fn loss_and_grads(
    graph: &TextGraph,
    model: &GcnModel,
    labels: &[(usize, usize)],
    reduction: LossReduction,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    let fwd = forward(graph, model)?;
    loss_and_grads_from(graph, model, &fwd, labels, reduction)
}

/// Same as [`loss_and_grads`] but reuses an existing forward pass.
pub fn loss_and_grads_from(
    graph: &TextGraph,
    model: &GcnModel,
    fwd: &Forward,
    labels: &[(usize, usize)],
    reduction: LossReduction,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    if labels.is_empty() {
        return Err(Error::NoLabeledDocs);
    }
    let n = graph.n_nodes();
    let scale = match reduction {
        LossReduction::Sum => 1.0,
        LossReduction::Mean => 1.0 / labels.len() as f64,
    };

    let mut loss = 0.0;
    // dH = (Z - Y) on labeled training rows, zero elsewhere.
    let mut d_logits = DenseMatrix::zeros(n, model.n_classes);
    for &(doc, class) in labels {
        let node = graph.doc_node(doc);
        let p = fwd.probs.get(node, class).max(f64::MIN_POSITIVE);
        loss -= p.ln();
        for c in 0..model.n_classes {
            let y = if c == class { 1.0 } else { 0.0 };
            d_logits.set(node, c, (fwd.probs.get(node, c) - y) * scale);
        }
    }
    loss *= scale;

    // dW2 = (Â H1)^T dH.
    let d_w2 = fwd.aggregated.matmul_tn(&d_logits)?;
    // dH1 = Â^T (dH W2^T), then gate by relu'.
    let d_h = d_logits.matmul(&transpose(&model.w2))?;
    let mut d_pre = graph.normalized_t().spmm(&d_h)?;
    for (g, &pre) in d_pre.data.iter_mut().zip(&fwd.pre_hidden.data) {
        if pre <= 0.0 {
            *g = 0.0;
        }
    }
    // dW1 = (Â X)^T dPre; row t of (Â[:, :V])^T is row t of Â^T.
    let mut d_w1 = DenseMatrix::zeros(model.n_tokens, model.hidden);
    let a_hat_t = graph.normalized_t();
    for t in 0..model.n_tokens {
        let out_row = d_w1.row_mut(t);
        for (r, v) in a_hat_t.row(t) {
            let g_row = d_pre.row(r);
            for (o, &g) in out_row.iter_mut().zip(g_row) {
                *o += v * g;
            }
        }
    }
    Ok((loss, d_w1, d_w2))
}

fn transpose(m: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.cols, m.rows);
    for r in 0..m.rows {
        for c in 0..m.cols {
            out.set(c, r, m.get(r, c));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GcnModel,
    pub trace: Vec<EpochStats>,
}

/// Full-batch Adam training. Deterministic given the seed; returns the
/// final-epoch model unless `best_val` is set.
pub fn train(graph: &TextGraph, corpus: &Corpus, config: &TrainConfig) -> Result<TrainOutcome> {
    if config.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be >= 1".into()));
    }
    if config.learning_rate <= 0.0 {
        return Err(Error::InvalidConfig("learning rate must be > 0".into()));
    }
    let labels = corpus.train_labels();
    if labels.is_empty() {
        return Err(Error::NoLabeledDocs);
    }
    let val_labels: Vec<(usize, usize)> = corpus
        .docs_in(Split::Val)
        .filter_map(|d| d.label.map(|l| (d.id, l)))
        .collect();

    let mut model = GcnModel::init(
        graph.n_tokens,
        config.hidden,
        corpus.n_classes().max(2),
        config.seed,
    );
    let mut adam_w1 = AdamState::new("w1", config.learning_rate, model.w1.data.len());
    let mut adam_w2 = AdamState::new("w2", config.learning_rate, model.w2.data.len());

    let mut trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, GcnModel)> = None;
    let mut since_improve = 0usize;

    for epoch in 1..=config.epochs {
        let fwd = forward(graph, &model)?;
        if !fwd.probs.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let (loss, mut d_w1, mut d_w2) =
            loss_and_grads_from(graph, &model, &fwd, &labels, config.reduction)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        if config.weight_decay > 0.0 {
            for (g, w) in d_w1.data.iter_mut().zip(&model.w1.data) {
                *g += config.weight_decay * w;
            }
            for (g, w) in d_w2.data.iter_mut().zip(&model.w2.data) {
                *g += config.weight_decay * w;
            }
        }
        let blown = |e: Error| match e {
            Error::NonFiniteGradient { .. } => Error::Divergence { epoch },
            other => other,
        };
        adam_step(&mut model.w1, &d_w1, &mut adam_w1).map_err(blown)?;
        adam_step(&mut model.w2, &d_w2, &mut adam_w2).map_err(blown)?;

        let val_accuracy = if val_labels.is_empty() {
            None
        } else {
            Some(accuracy_from_probs(graph, &fwd.probs, &val_labels))
        };
        trace.push(EpochStats {
            epoch,
            loss,
            val_accuracy,
        });

        if let Some(acc) = val_accuracy {
            let improved = best.as_ref().is_none_or(|(b, _)| acc > *b);
            if improved {
                best = Some((acc, model.clone()));
                since_improve = 0;
            } else {
                since_improve += 1;
                if config.patience.is_some_and(|p| since_improve >= p) {
                    break;
                }
            }
        }
    }

    let model = match (config.best_val, best) {
        (true, Some((_, m))) => m,
        _ => model,
    };
    Ok(TrainOutcome { model, trace })
}

fn accuracy_from_probs(graph: &TextGraph, probs: &DenseMatrix, labels: &[(usize, usize)]) -> f64 {
    let mut hit = 0usize;
    for &(doc, class) in labels {
        if argmax(probs.row(graph.doc_node(doc))) == class {
            hit += 1;
        }
    }
    hit as f64 / labels.len() as f64
}

/// Lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Class probabilities and argmax predictions for document nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_ids: Vec<usize>,
    /// One probability row per requested document.
    pub probs: Vec<Vec<f64>>,
    pub classes: Vec<usize>,
    /// Probability of class 1, the conventional machine class.
    pub machine_scores: Vec<f64>,
}

pub fn predict(graph: &TextGraph, model: &GcnModel, doc_ids: &[usize]) -> Result<Prediction> {
    for &id in doc_ids {
        if id >= graph.n_docs {
            return Err(Error::UnknownDoc {
                id,
                n_docs: graph.n_docs,
            });
        }
    }
    let fwd = forward(graph, model)?;
    let mut probs = Vec::with_capacity(doc_ids.len());
    let mut classes = Vec::with_capacity(doc_ids.len());
    let mut machine_scores = Vec::with_capacity(doc_ids.len());
    for &id in doc_ids {
        let row = fwd.probs.row(graph.doc_node(id)).to_vec();
        classes.push(argmax(&row));
        machine_scores.push(row.get(1).copied().unwrap_or(0.0));
        probs.push(row);
    }
    Ok(Prediction {
        doc_ids: doc_ids.to_vec(),
        probs,
        classes,
        machine_scores,
    })
}

/// Test-split accuracy from a fresh forward pass.
pub fn test_accuracy(graph: &TextGraph, model: &GcnModel, corpus: &Corpus) -> Result<f64> {
    let labels: Vec<(usize, usize)> = corpus
        .docs_in(Split::Test)
        .filter_map(|d| d.label.map(|l| (d.id, l)))
        .collect();
    if labels.is_empty() {
        return Err(Error::NoLabeledDocs);
    }
    let fwd = forward(graph, model)?;
    Ok(accuracy_from_probs(graph, &fwd.probs, &labels))
}

/// Rank-based (Mann-Whitney) AUC with ties counted as half.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "auc",
            left: scores.len().to_string(),
            right: labels.len().to_string(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // Average ranks over tied groups.
    let mut ranks = vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l == 1)
        .map(|(_, &r)| r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

// --- checkpoint format ------------------------------------------------------

/// Versioned binary checkpoint: header (magic, version, V, D, h, C, seed),
/// then W1 token rows and W2, row-major f64.
pub fn save_checkpoint(model: &GcnModel, n_docs: usize, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(model.n_tokens as u64).to_le_bytes())?;
    w.write_all(&(n_docs as u64).to_le_bytes())?;
    w.write_all(&(model.hidden as u64).to_le_bytes())?;
    w.write_all(&(model.n_classes as u64).to_le_bytes())?;
    w.write_all(&model.seed.to_le_bytes())?;
    for &v in model.w1.data.iter().chain(model.w2.data.iter()) {
        w.write_all(&v.to_bits().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(GcnModel, usize)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 48 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::InvalidCache("bad checkpoint header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::InvalidCache(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let n_tokens = u64_at(8) as usize;
    let n_docs = u64_at(16) as usize;
    let hidden = u64_at(24) as usize;
    let n_classes = u64_at(32) as usize;
    let seed = u64_at(40);
    let expected = 48 + 8 * (n_tokens * hidden + hidden * n_classes);
    if bytes.len() != expected {
        return Err(Error::InvalidCache("checkpoint size mismatch".into()));
    }
    let mut floats = bytes[48..]
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())));
    let w1_data: Vec<f64> = floats.by_ref().take(n_tokens * hidden).collect();
    let w2_data: Vec<f64> = floats.collect();
    Ok((
        GcnModel {
            n_tokens,
            n_classes,
            hidden,
            seed,
            w1: DenseMatrix::from_vec(n_tokens, hidden, w1_data),
            w2: DenseMatrix::from_vec(hidden, n_classes, w2_data),
        },
        n_docs,
    ))
}
