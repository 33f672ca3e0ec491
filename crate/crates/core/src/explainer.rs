//! Post-hoc edge-mask explanations.
//!
//! For a document node, a sigmoid-activated logit per edge of its
//! computational subgraph is optimized with Adam against cross-entropy to the
//! model's own prediction plus a size penalty on the mask. High-importance
//! edges form motifs at three granularities: word-level (1-hop), high-order
//! (2-hop), and global (aggregated across documents).
//!
//! For a two-layer network the computational subgraph of document d is: d's
//! own incident edges, plus the token-column edges of every 1-hop neighbor.
//! Token-to-other-document edges carry no gradient (document features are
//! zero) and stay out of the mask domain.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::gcn::{argmax, GcnModel};
use crate::graph::{EdgeRef, TextGraph};
use crate::numeric::{adam_step, AdamState, DenseMatrix};

pub const ORACLE_EDGE_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplainTarget {
    /// Match the model's own full-graph prediction (post-hoc default).
    Prediction,
    /// Match the ground-truth label.
    Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Size penalty weight on the summed mask.
    pub size_penalty: f64,
    /// Optional mask-entropy coefficient; zero keeps the plain objective.
    pub entropy_coeff: f64,
    pub word_level_ratio: f64,
    pub high_order_ratio: f64,
    pub global_ratio: f64,
    pub seed: u64,
    pub target: ExplainTarget,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            size_penalty: 0.01,
            entropy_coeff: 0.0,
            word_level_ratio: 0.20,
            high_order_ratio: 0.02,
            global_ratio: 0.0005,
            seed: 42,
            target: ExplainTarget::Prediction,
        }
    }
}

/// Optimized mask for one document node. `(u, v)` and `(v, u)` share one
/// logit, so importance is symmetric by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeMask {
    pub doc: usize,
    pub target_class: usize,
    pub edges: Vec<EdgeRef>,
    pub logits: Vec<f64>,
}

impl EdgeMask {
    pub fn importances(&self) -> Vec<(EdgeRef, f64)> {
        self.edges
            .iter()
            .zip(&self.logits)
            .map(|(&e, &m)| (e, sigmoid(m)))
            .collect()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One layer-1 input: token column, normalized value, raw adjacency value,
/// mask index.
type Layer1Entry = (usize, f64, f64, usize);
/// One layer-2 input: neighbor position, normalized value, raw value, mask
/// index.
type Layer2Entry = (usize, f64, f64, usize);

/// Computational subgraph of one document node.
pub struct LocalView {
    pub target_node: usize,
    pub edges: Vec<EdgeRef>,
    /// 1-hop nodes: the target plus its row columns, ascending.
    neighborhood: Vec<usize>,
    layer1: Vec<Vec<Layer1Entry>>,
    layer2: Vec<Layer2Entry>,
}

impl LocalView {
    pub fn build(graph: &TextGraph, doc: usize) -> Result<Self> {
        if doc >= graph.n_docs {
            return Err(Error::UnknownDoc {
                id: doc,
                n_docs: graph.n_docs,
            });
        }
        let target_node = graph.doc_node(doc);
        let v = graph.n_tokens;
        let neighborhood: Vec<usize> = graph
            .normalized
            .row(target_node)
            .map(|(c, _)| c)
            .collect();
        if neighborhood.len() <= 1 {
            return Err(Error::IsolatedNode { node: target_node });
        }

        // Collect the edge set, then index it in canonical EdgeRef order so
        // mask logits line up with sorted edges.
        let mut edge_set: BTreeSet<EdgeRef> = BTreeSet::new();
        for &u in &neighborhood {
            for (c, _) in graph.normalized.row(u) {
                if u == target_node || c < v {
                    edge_set.insert(EdgeRef::new(u as u32, c as u32));
                }
            }
        }
        let edges: Vec<EdgeRef> = edge_set.into_iter().collect();
        let index: HashMap<EdgeRef, usize> = edges
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();

        let pos_of: HashMap<usize, usize> = neighborhood
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i))
            .collect();

        let mut layer1 = Vec::with_capacity(neighborhood.len());
        for &u in &neighborhood {
            let mut row = Vec::new();
            for ((c, norm), (_, raw)) in graph
                .normalized
                .row(u)
                .zip(graph.adjacency.row(u))
            {
                if c < v {
                    let e = index[&EdgeRef::new(u as u32, c as u32)];
                    row.push((c, norm, raw, e));
                }
            }
            layer1.push(row);
        }
        let mut layer2 = Vec::new();
        for ((c, norm), (_, raw)) in graph
            .normalized
            .row(target_node)
            .zip(graph.adjacency.row(target_node))
        {
            let e = index[&EdgeRef::new(target_node as u32, c as u32)];
            layer2.push((pos_of[&c], norm, raw, e));
        }

        Ok(Self {
            target_node,
            edges,
            neighborhood,
            layer1,
            layer2,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Probability row for the target under per-edge mask values applied to
    /// the normalized adjacency (no degree renormalization).
    pub fn masked_probs(&self, model: &GcnModel, sigma: &[f64]) -> Vec<f64> {
        let h = model.hidden;
        let mut hidden = vec![vec![0.0f64; h]; self.neighborhood.len()];
        for (i, row) in self.layer1.iter().enumerate() {
            let out = &mut hidden[i];
            for &(col, norm, _, e) in row {
                let w = norm * sigma[e];
                let w1_row = model.w1.row(col);
                for (o, &x) in out.iter_mut().zip(w1_row) {
                    *o += w * x;
                }
            }
            for x in out.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
        let mut agg = vec![0.0f64; h];
        for &(pos, norm, _, e) in &self.layer2 {
            let w = norm * sigma[e];
            for (o, &x) in agg.iter_mut().zip(&hidden[pos]) {
                *o += w * x;
            }
        }
        logits_to_probs(&agg, &model.w2)
    }

    /// Probability row after discretely removing one view edge, with the
    /// degree normalization recomputed on the affected rows.
    fn probs_without_edge(
        &self,
        model: &GcnModel,
        degrees: &[f64],
        removed: EdgeRef,
        removed_raw: f64,
    ) -> Vec<f64> {
        let (ru, rv) = (removed.u as usize, removed.v as usize);
        let deg = |n: usize| -> f64 {
            let mut d = degrees[n];
            if n == ru {
                d -= removed_raw;
            }
            if n == rv {
                d -= removed_raw;
            }
            d
        };
        let value = |a: usize, b: usize, raw: f64| -> f64 {
            if EdgeRef::new(a as u32, b as u32) == removed {
                return 0.0;
            }
            let (da, db) = (deg(a), deg(b));
            if da <= 0.0 || db <= 0.0 {
                0.0
            } else {
                raw / (da * db).sqrt()
            }
        };
        let h = model.hidden;
        let mut hidden = vec![vec![0.0f64; h]; self.neighborhood.len()];
        for (i, row) in self.layer1.iter().enumerate() {
            let u = self.neighborhood[i];
            let out = &mut hidden[i];
            for &(col, _, raw, _) in row {
                let w = value(u, col, raw);
                if w == 0.0 {
                    continue;
                }
                let w1_row = model.w1.row(col);
                for (o, &x) in out.iter_mut().zip(w1_row) {
                    *o += w * x;
                }
            }
            for x in out.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
        let mut agg = vec![0.0f64; h];
        for &(pos, _, raw, _) in &self.layer2 {
            let w = value(self.target_node, self.neighborhood[pos], raw);
            if w == 0.0 {
                continue;
            }
            for (o, &x) in agg.iter_mut().zip(&hidden[pos]) {
                *o += w * x;
            }
        }
        logits_to_probs(&agg, &model.w2)
    }

    /// Gradient of CE(target; masked probs) + penalties w.r.t. mask logits.
    pub fn grads(
        &self,
        model: &GcnModel,
        logits_m: &[f64],
        sigma: &[f64],
        target_class: usize,
        config: &ExplainConfig,
    ) -> (f64, Vec<f64>) {
        let h = model.hidden;
        let n_local = self.neighborhood.len();
        let mut pre = vec![vec![0.0f64; h]; n_local];
        let mut hidden = vec![vec![0.0f64; h]; n_local];
        for (i, row) in self.layer1.iter().enumerate() {
            for &(col, norm, _, e) in row {
                let w = norm * sigma[e];
                let w1_row = model.w1.row(col);
                for (o, &x) in pre[i].iter_mut().zip(w1_row) {
                    *o += w * x;
                }
            }
            for (p, hd) in pre[i].iter().zip(hidden[i].iter_mut()) {
                *hd = p.max(0.0);
            }
        }
        let mut agg = vec![0.0f64; h];
        for &(pos, norm, _, e) in &self.layer2 {
            let w = norm * sigma[e];
            for (o, &x) in agg.iter_mut().zip(&hidden[pos]) {
                *o += w * x;
            }
        }
        let probs = logits_to_probs(&agg, &model.w2);
        let ce = -probs[target_class].max(f64::MIN_POSITIVE).ln();

        // dCE/dlogits = z - y, pushed back through W2.
        let mut d_agg = vec![0.0f64; h];
        for c in 0..model.n_classes {
            let d = probs[c] - if c == target_class { 1.0 } else { 0.0 };
            for k in 0..h {
                d_agg[k] += model.w2.get(k, c) * d;
            }
        }

        let mut d_sigma = vec![0.0f64; sigma.len()];
        let mut d_hidden = vec![vec![0.0f64; h]; n_local];
        for &(pos, norm, _, e) in &self.layer2 {
            let dot: f64 = hidden[pos].iter().zip(&d_agg).map(|(a, b)| a * b).sum();
            d_sigma[e] += norm * dot;
            let w = norm * sigma[e];
            for (o, &x) in d_hidden[pos].iter_mut().zip(&d_agg) {
                *o += w * x;
            }
        }
        for (i, row) in self.layer1.iter().enumerate() {
            let ds: Vec<f64> = d_hidden[i]
                .iter()
                .zip(&pre[i])
                .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
                .collect();
            if ds.iter().all(|&g| g == 0.0) {
                continue;
            }
            for &(col, norm, _, e) in row {
                let dot: f64 = model.w1.row(col).iter().zip(&ds).map(|(a, b)| a * b).sum();
                d_sigma[e] += norm * dot;
            }
        }

        let mut d_logits = vec![0.0f64; sigma.len()];
        for e in 0..sigma.len() {
            let sp = sigma[e] * (1.0 - sigma[e]);
            let mut g = d_sigma[e] * sp + config.size_penalty * sp;
            if config.entropy_coeff != 0.0 {
                g += config.entropy_coeff * (-logits_m[e]) * sp;
            }
            d_logits[e] = g;
        }
        (ce, d_logits)
    }
}

fn logits_to_probs(agg: &[f64], w2: &DenseMatrix) -> Vec<f64> {
    let n_classes = w2.cols;
    let mut logits = vec![0.0f64; n_classes];
    for k in 0..w2.rows {
        let a = agg[k];
        if a == 0.0 {
            continue;
        }
        for (c, l) in logits.iter_mut().enumerate() {
            *l += a * w2.get(k, c);
        }
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut probs = logits;
    for p in probs.iter_mut() {
        *p = (*p - max).exp();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    probs
}

/// Full-graph probability row for a document, computed through its
/// computational subgraph (exact for a two-layer network).
pub fn full_graph_probs(graph: &TextGraph, model: &GcnModel, doc: usize) -> Result<Vec<f64>> {
    let view = LocalView::build(graph, doc)?;
    let sigma = vec![1.0; view.n_edges()];
    Ok(view.masked_probs(model, &sigma))
}

/// Optimizes a sigmoid edge mask explaining the model's prediction for one
/// document. Model weights stay frozen; only mask logits receive gradients.
pub fn explain_node(
    graph: &TextGraph,
    model: &GcnModel,
    doc: usize,
    config: &ExplainConfig,
) -> Result<EdgeMask> {
    explain_node_with_target(graph, model, doc, config, None)
}

/// Like [`explain_node`] with an explicit target class (ground-truth mode).
pub fn explain_node_with_target(
    graph: &TextGraph,
    model: &GcnModel,
    doc: usize,
    config: &ExplainConfig,
    label: Option<usize>,
) -> Result<EdgeMask> {
    let view = LocalView::build(graph, doc)?;
    let target_class = match (config.target, label) {
        (ExplainTarget::Label, Some(class)) => class,
        (ExplainTarget::Label, None) => {
            return Err(Error::InvalidConfig(
                "label-target explanation needs a label".into(),
            ))
        }
        (ExplainTarget::Prediction, _) => {
            let sigma = vec![1.0; view.n_edges()];
            argmax(&view.masked_probs(model, &sigma))
        }
    };

    // Mask logits start near zero so every sigma begins around 0.5. The
    // spread must stay well below the total Adam movement (lr x epochs),
    // otherwise final rankings reflect initialization luck.
    let mut rng = ChaCha8Rng::seed_from_u64(
        config.seed ^ (doc as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let init_std = 0.1 * config.learning_rate * config.epochs as f64;
    let mut logits = DenseMatrix::from_vec(
        1,
        view.n_edges(),
        (0..view.n_edges())
            .map(|_| init_std * gaussian(&mut rng))
            .collect(),
    );
    let mut adam = AdamState::new(
        format!("mask[doc {doc}]"),
        config.learning_rate,
        logits.data.len(),
    );

    for _ in 0..config.epochs {
        let sigma: Vec<f64> = logits.data.iter().map(|&m| sigmoid(m)).collect();
        let (_, d) = view.grads(model, &logits.data, &sigma, target_class, config);
        let grad = DenseMatrix::from_vec(1, d.len(), d);
        adam_step(&mut logits, &grad, &mut adam)?;
    }

    Ok(EdgeMask {
        doc,
        target_class,
        edges: view.edges,
        logits: logits.data,
    })
}

/// Explanations for many documents, parallel across documents and
/// deterministic through per-document seeds.
pub fn explain_many(
    graph: &TextGraph,
    model: &GcnModel,
    docs: &[usize],
    config: &ExplainConfig,
) -> Result<Vec<EdgeMask>> {
    docs.par_iter()
        .map(|&d| explain_node(graph, model, d, config))
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller from two uniforms.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Per-edge fidelity drops from discretely deleting each non-self-loop edge
/// of the computational subgraph, one at a time, with local renormalization.
/// The brute-force oracle for mask validation; refuses large subgraphs.
pub fn leave_one_edge_out(
    graph: &TextGraph,
    model: &GcnModel,
    doc: usize,
) -> Result<Vec<(EdgeRef, f64)>> {
    let view = LocalView::build(graph, doc)?;
    if view.n_edges() > ORACLE_EDGE_LIMIT {
        return Err(Error::SubgraphTooLarge {
            edges: view.n_edges(),
            limit: ORACLE_EDGE_LIMIT,
        });
    }
    let degrees: Vec<f64> = (0..graph.n_nodes())
        .map(|r| graph.adjacency.row(r).map(|(_, v)| v).sum())
        .collect();
    let sigma = vec![1.0; view.n_edges()];
    let base_probs = view.masked_probs(model, &sigma);
    let predicted = argmax(&base_probs);
    let base = base_probs[predicted];

    let mut raw_of: HashMap<EdgeRef, f64> = HashMap::new();
    for row in view.layer1.iter() {
        for &(col, _, raw, e) in row {
            let _ = col;
            raw_of.insert(view.edges[e], raw);
        }
    }
    for &(_, _, raw, e) in &view.layer2 {
        raw_of.insert(view.edges[e], raw);
    }

    let mut out = Vec::new();
    for &edge in view.edges.iter().filter(|e| !e.is_self_loop()) {
        let raw = raw_of[&edge];
        let probs = view.probs_without_edge(model, &degrees, edge, raw);
        out.push((edge, base - probs[predicted]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    WordLevel,
    HighOrder,
    Global,
}

impl std::str::FromStr for Granularity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-level" | "word" => Ok(Granularity::WordLevel),
            "high-order" | "phrase" => Ok(Granularity::HighOrder),
            "global" => Ok(Granularity::Global),
            other => Err(Error::InvalidConfig(format!(
                "unknown granularity {other:?}"
            ))),
        }
    }
}

/// An explanation subgraph: scored edges sorted by descending importance,
/// ties broken by canonical edge order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Motif {
    pub granularity: Granularity,
    pub doc: Option<usize>,
    pub class: Option<usize>,
    pub edges: Vec<(EdgeRef, f64)>,
}

fn top_k(mut scored: Vec<(EdgeRef, f64)>, k: usize) -> Vec<(EdgeRef, f64)> {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    scored
}

/// Word-level motifs keep the top fraction of 1-hop token neighbors by
/// incident-edge importance; high-order motifs keep the top fraction of all
/// 2-hop edges.
pub fn extract_motifs(
    mask: &EdgeMask,
    graph: &TextGraph,
    granularity: Granularity,
    config: &ExplainConfig,
) -> Result<Motif> {
    let target_node = graph.doc_node(mask.doc) as u32;
    let scored = mask.importances();
    let edges = match granularity {
        Granularity::WordLevel => {
            let one_hop: Vec<(EdgeRef, f64)> = scored
                .iter()
                .copied()
                .filter(|(e, _)| {
                    !e.is_self_loop() && (e.u == target_node || e.v == target_node)
                })
                .collect();
            let k = (config.word_level_ratio * one_hop.len() as f64).ceil() as usize;
            top_k(one_hop, k)
        }
        Granularity::HighOrder => {
            let two_hop: Vec<(EdgeRef, f64)> = scored
                .iter()
                .copied()
                .filter(|(e, _)| !e.is_self_loop())
                .collect();
            let k = (config.high_order_ratio * two_hop.len() as f64).ceil() as usize;
            top_k(two_hop, k)
        }
        Granularity::Global => {
            return Err(Error::InvalidConfig(
                "global motifs come from global_motif, not a single mask".into(),
            ))
        }
    };
    Ok(Motif {
        granularity,
        doc: Some(mask.doc),
        class: Some(mask.target_class),
        edges,
    })
}

/// Mean importance per edge across the masks that contain it (self-loops
/// excluded).
pub fn mean_importance(masks: &[EdgeMask]) -> HashMap<EdgeRef, f64> {
    let mut acc: HashMap<EdgeRef, (f64, u32)> = HashMap::new();
    for mask in masks {
        for (e, imp) in mask.importances() {
            if e.is_self_loop() {
                continue;
            }
            let slot = acc.entry(e).or_insert((0.0, 0));
            slot.0 += imp;
            slot.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(e, (s, c))| (e, s / c as f64))
        .collect()
}

/// Global motif: top `ratio` fraction of the graph's non-self-loop edges by
/// mean mask importance. Uncovered edges rank last with importance zero.
pub fn global_motif(masks: &[EdgeMask], graph: &TextGraph, ratio: f64) -> Result<Motif> {
    if masks.is_empty() {
        return Err(Error::EmptyMaskSet);
    }
    let importance = mean_importance(masks);
    let total = graph.removable_edges().count();
    let k = ((ratio * total as f64).ceil() as usize).min(total);
    let mut scored: Vec<(EdgeRef, f64)> = graph
        .removable_edges()
        .map(|e| (e.edge, importance.get(&e.edge).copied().unwrap_or(0.0)))
        .collect();
    scored = top_k(scored, k);
    Ok(Motif {
        granularity: Granularity::Global,
        doc: None,
        class: None,
        edges: scored,
    })
}

/// One class row of the motif fingerprint table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FingerprintRow {
    pub class: String,
    /// Documents of the class containing at least one motif token.
    pub token_docs: u64,
    /// Documents containing a motif token pair within one window.
    pub edge_docs: u64,
    pub ratio: Option<f64>,
}

/// Token count over edge count, `None` when the denominator is zero.
pub fn fingerprint_ratio(token_count: u64, edge_count: u64) -> Option<f64> {
    if edge_count == 0 {
        None
    } else {
        Some(token_count as f64 / edge_count as f64)
    }
}

/// Counts, per class, how many documents contain motif tokens and motif
/// token pairs co-occurring within the window.
pub fn fingerprint_stats(
    motif: &Motif,
    corpus: &Corpus,
    n_tokens: usize,
    window: usize,
) -> Vec<FingerprintRow> {
    let mut motif_tokens: Vec<u32> = Vec::new();
    let mut motif_pairs: Vec<(u32, u32)> = Vec::new();
    for &(e, _) in &motif.edges {
        if (e.u as usize) < n_tokens {
            motif_tokens.push(e.u);
        }
        if (e.v as usize) < n_tokens {
            motif_tokens.push(e.v);
        }
        if (e.u as usize) < n_tokens && (e.v as usize) < n_tokens && e.u != e.v {
            motif_pairs.push((e.u, e.v));
        }
    }
    motif_tokens.sort_unstable();
    motif_tokens.dedup();

    let mut token_docs = vec![0u64; corpus.n_classes()];
    let mut edge_docs = vec![0u64; corpus.n_classes()];
    for doc in &corpus.documents {
        let Some(class) = doc.label else { continue };
        let has_token = doc
            .tokens
            .iter()
            .any(|t| motif_tokens.binary_search(t).is_ok());
        if has_token {
            token_docs[class] += 1;
        }
        let mut positions: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, &t) in doc.tokens.iter().enumerate() {
            if motif_tokens.binary_search(&t).is_ok() {
                positions.entry(t).or_default().push(i);
            }
        }
        let within_window = motif_pairs.iter().any(|&(a, b)| {
            let (Some(pa), Some(pb)) = (positions.get(&a), positions.get(&b)) else {
                return false;
            };
            pa.iter().any(|&x| {
                pb.iter()
                    .any(|&y| x.abs_diff(y) <= window.saturating_sub(1))
            })
        });
        if within_window {
            edge_docs[class] += 1;
        }
    }

    corpus
        .class_names
        .iter()
        .enumerate()
        .map(|(c, name)| FingerprintRow {
            class: name.clone(),
            token_docs: token_docs[c],
            edge_docs: edge_docs[c],
            ratio: fingerprint_ratio(token_docs[c], edge_docs[c]),
        })
        .collect()
}

// --- exports ----------------------------------------------------------------

fn node_label(node: u32, graph: &TextGraph, corpus: &Corpus) -> String {
    if (node as usize) < graph.n_tokens {
        corpus.vocabulary.token(node).to_string()
    } else {
        format!("doc {}", node as usize - graph.n_tokens)
    }
}

/// DOT rendering: token nodes labeled with vocabulary strings, pen width
/// proportional to importance, solid token-token edges and dashed token-doc
/// containment edges.
pub fn motif_to_dot(motif: &Motif, graph: &TextGraph, corpus: &Corpus) -> String {
    let mut out = String::from("graph motif {\n  node [fontname=\"Helvetica\"];\n");
    let mut nodes: Vec<u32> = motif
        .edges
        .iter()
        .flat_map(|&(e, _)| [e.u, e.v])
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    for n in &nodes {
        let label = node_label(*n, graph, corpus).replace('"', "\\\"");
        let shape = if (*n as usize) < graph.n_tokens {
            "ellipse"
        } else {
            "box"
        };
        out.push_str(&format!("  n{n} [label=\"{label}\", shape={shape}];\n"));
    }
    for &(e, imp) in &motif.edges {
        let dashed = (e.u as usize) < graph.n_tokens && (e.v as usize) >= graph.n_tokens;
        let style = if dashed { ", style=dashed" } else { "" };
        out.push_str(&format!(
            "  n{} -- n{} [penwidth={:.2}{style}];\n",
            e.u,
            e.v,
            0.5 + 4.0 * imp
        ));
    }
    out.push_str("}\n");
    out
}

/// JSON rendering: edges as (u string, v string, importance) triples plus
/// run metadata.
pub fn motif_to_json(
    motif: &Motif,
    graph: &TextGraph,
    corpus: &Corpus,
    config: &ExplainConfig,
) -> Result<String> {
    #[derive(Serialize)]
    struct Out<'a> {
        granularity: &'a Granularity,
        doc: Option<usize>,
        class: Option<usize>,
        ratio: f64,
        size_penalty: f64,
        edges: Vec<(String, String, f64)>,
    }
    let ratio = match motif.granularity {
        Granularity::WordLevel => config.word_level_ratio,
        Granularity::HighOrder => config.high_order_ratio,
        Granularity::Global => config.global_ratio,
    };
    let edges = motif
        .edges
        .iter()
        .map(|&(e, imp)| {
            (
                node_label(e.u, graph, corpus),
                node_label(e.v, graph, corpus),
                imp,
            )
        })
        .collect();
    Ok(serde_json::to_string_pretty(&Out {
        granularity: &motif.granularity,
        doc: motif.doc,
        class: motif.class,
        ratio,
        size_penalty: config.size_penalty,
        edges,
    })?)
}
