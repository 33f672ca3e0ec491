//! Token/document graph construction.
//!
//! Sliding-window co-occurrence counts gate token-token edges through a
//! strict PMI > 0 test; token-document edges follow containment; every node
//! carries a self-loop. The adjacency is binary by default and normalized
//! symmetrically (D^{-1/2} A D^{-1/2}) for propagation.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::numeric::CsrMatrix;

const CACHE_MAGIC: &[u8; 4] = b"TGPH";
const CACHE_VERSION: u32 = 1;

/// Per-pair window statistics. `first_before_second` / `second_before_first`
/// record precedence for the directed variant.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PairStat {
    pub count: u64,
    pub first_before_second: bool,
    pub second_before_first: bool,
}

/// Window counts over the corpus: total windows, per-token window frequency,
/// and per-unordered-pair co-occurrence counts (a pair counts at most once
/// per window).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CooccurrenceStats {
    pub window: usize,
    pub total_windows: u64,
    pub token_windows: Vec<u64>,
    pub pair_windows: HashMap<(u32, u32), PairStat>,
}

impl CooccurrenceStats {
    pub fn token_prob(&self, token: u32) -> f64 {
        self.token_windows[token as usize] as f64 / self.total_windows as f64
    }
}

/// Counts sliding windows of `window` tokens, stride 1, within each document
/// independently. Documents shorter than the window contribute one window of
/// their full length.
pub fn count_cooccurrence(corpus: &Corpus, window: usize) -> Result<CooccurrenceStats> {
    if window < 2 {
        return Err(Error::InvalidConfig(format!(
            "window must be >= 2 (got {window})"
        )));
    }
    let n_tokens = corpus.vocabulary.len();

    struct Partial {
        windows: u64,
        token: Vec<u64>,
        pairs: HashMap<(u32, u32), PairStat>,
    }

    let merged = corpus
        .documents
        .par_iter()
        .map(|doc| {
            let mut p = Partial {
                windows: 0,
                token: vec![0; n_tokens],
                pairs: HashMap::new(),
            };
            let toks = &doc.tokens;
            let n_windows = if toks.len() <= window {
                1
            } else {
                toks.len() - window + 1
            };
            let span = window.min(toks.len());
            for start in 0..n_windows {
                p.windows += 1;
                let slice = &toks[start..start + span];
                let mut distinct: Vec<u32> = slice.to_vec();
                distinct.sort_unstable();
                distinct.dedup();
                for &t in &distinct {
                    p.token[t as usize] += 1;
                }
                for i in 0..distinct.len() {
                    for j in (i + 1)..distinct.len() {
                        let (a, b) = (distinct[i], distinct[j]);
                        let entry = p.pairs.entry((a, b)).or_default();
                        entry.count += 1;
                        // a precedes b iff some occurrence of a sits before
                        // some occurrence of b.
                        let first_a = slice.iter().position(|&t| t == a).unwrap();
                        let last_a = slice.iter().rposition(|&t| t == a).unwrap();
                        let first_b = slice.iter().position(|&t| t == b).unwrap();
                        let last_b = slice.iter().rposition(|&t| t == b).unwrap();
                        if first_a < last_b {
                            entry.first_before_second = true;
                        }
                        if first_b < last_a {
                            entry.second_before_first = true;
                        }
                    }
                }
            }
            p
        })
        .reduce(
            || Partial {
                windows: 0,
                token: vec![0; n_tokens],
                pairs: HashMap::new(),
            },
            |mut a, b| {
                a.windows += b.windows;
                for (x, y) in a.token.iter_mut().zip(b.token) {
                    *x += y;
                }
                for (k, v) in b.pairs {
                    let e = a.pairs.entry(k).or_default();
                    e.count += v.count;
                    e.first_before_second |= v.first_before_second;
                    e.second_before_first |= v.second_before_first;
                }
                a
            },
        );

    Ok(CooccurrenceStats {
        window,
        total_windows: merged.windows,
        token_windows: merged.token,
        pair_windows: merged.pairs,
    })
}

/// Exact sign test for PMI > 0: p(i,j) > p(i) p(j) is equivalent to the
/// integer inequality N_ij * total > N_i * N_j, which avoids float rounding
/// at the boundary.
pub fn pmi_positive(stats: &CooccurrenceStats, i: u32, j: u32) -> bool {
    if i == j {
        return false;
    }
    let key = if i < j { (i, j) } else { (j, i) };
    let Some(pair) = stats.pair_windows.get(&key) else {
        return false;
    };
    let (ni, nj) = (
        stats.token_windows[i as usize] as u128,
        stats.token_windows[j as usize] as u128,
    );
    (pair.count as u128) * (stats.total_windows as u128) > ni * nj
}

/// Natural-log pointwise mutual information. `None` when the pair was never
/// observed together or either token never appeared.
pub fn pmi(stats: &CooccurrenceStats, i: u32, j: u32) -> Option<f64> {
    if i == j {
        return None;
    }
    let key = if i < j { (i, j) } else { (j, i) };
    let pair = stats.pair_windows.get(&key)?;
    if pair.count == 0 {
        return None;
    }
    let (ni, nj) = (
        stats.token_windows[i as usize],
        stats.token_windows[j as usize],
    );
    if ni == 0 || nj == 0 {
        return None;
    }
    let total = stats.total_windows as f64;
    let p_ij = pair.count as f64 / total;
    let p_i = ni as f64 / total;
    let p_j = nj as f64 / total;
    Some((p_ij / (p_i * p_j)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    TokenToken,
    TokenDoc,
    SelfLoop,
}

/// Undirected edge identity in canonical (u <= v) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub u: u32,
    pub v: u32,
}

impl EdgeRef {
    pub fn new(a: u32, b: u32) -> Self {
        if a <= b {
            Self { u: a, v: b }
        } else {
            Self { u: b, v: a }
        }
    }

    pub fn is_self_loop(&self) -> bool {
        self.u == self.v
    }
}

/// Direction mask bit: the edge runs from `edge.u` to `edge.v`.
pub const DIR_FWD: u8 = 0b01;
/// Direction mask bit: the edge runs from `edge.v` to `edge.u`.
pub const DIR_BWD: u8 = 0b10;

/// Canonical edge record. `weight` carries PMI for token-token edges, the
/// token occurrence count for token-doc edges, and 1 for self-loops; the
/// adjacency uses these values only in weighted mode. `dirs` is both bits
/// except for token-token edges of the directed variant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Edge {
    pub edge: EdgeRef,
    pub kind: EdgeKind,
    pub weight: f64,
    pub dirs: u8,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GraphConfig {
    pub window: usize,
    /// Directed variant: a token-token edge goes only from the earlier to the
    /// later token of a window.
    pub directed: bool,
    /// Weighted variant: PMI / occurrence counts instead of binary values.
    pub weighted: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            window: 3,
            directed: false,
            weighted: false,
        }
    }
}

/// The heterogeneous token/document graph. Token nodes occupy indices
/// `0..n_tokens`, document nodes `n_tokens..n_tokens + n_docs`.
#[derive(Debug, Clone)]
pub struct TextGraph {
    pub n_tokens: usize,
    pub n_docs: usize,
    pub config: GraphConfig,
    /// Canonical edge list sorted by (u, v), self-loops included.
    pub edges: Vec<Edge>,
    /// Raw adjacency (binary, or variant weights in weighted mode).
    pub adjacency: CsrMatrix,
    /// Symmetrically normalized adjacency, same sparsity pattern.
    pub normalized: CsrMatrix,
    /// Transpose of `normalized`; present only for the directed variant.
    normalized_t: Option<CsrMatrix>,
}

impl TextGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_tokens + self.n_docs
    }

    pub fn doc_node(&self, doc_id: usize) -> usize {
        self.n_tokens + doc_id
    }

    pub fn normalized_t(&self) -> &CsrMatrix {
        self.normalized_t.as_ref().unwrap_or(&self.normalized)
    }

    /// Canonical non-self-loop edges, in EdgeRef order.
    pub fn removable_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind != EdgeKind::SelfLoop)
    }
}

/// Builds the graph per the adjacency rule: token-token edges where
/// PMI > 0 (strictly), token-doc edges by containment, self-loops everywhere.
/// Test documents are nodes like any other (transductive construction).
pub fn build_graph(corpus: &Corpus, stats: &CooccurrenceStats) -> Result<TextGraph> {
    build_graph_with(corpus, stats, GraphConfig::default())
}

pub fn build_graph_with(
    corpus: &Corpus,
    stats: &CooccurrenceStats,
    config: GraphConfig,
) -> Result<TextGraph> {
    let v = corpus.vocabulary.len();
    let d = corpus.n_docs();
    let n = v + d;

    let mut edges: Vec<Edge> = Vec::new();
    // Token-token edges: strict PMI > 0, tested in exact arithmetic.
    let mut pairs: Vec<&(u32, u32)> = stats.pair_windows.keys().collect();
    pairs.sort_unstable();
    for &(a, b) in pairs {
        if pmi_positive(stats, a, b) {
            let weight = pmi(stats, a, b).unwrap_or(0.0);
            let dirs = if config.directed {
                let stat = stats.pair_windows[&(a, b)];
                (stat.first_before_second as u8 * DIR_FWD)
                    | (stat.second_before_first as u8 * DIR_BWD)
            } else {
                DIR_FWD | DIR_BWD
            };
            edges.push(Edge {
                edge: EdgeRef::new(a, b),
                kind: EdgeKind::TokenToken,
                weight,
                dirs,
            });
        }
    }
    // Token-doc edges by containment, weight = occurrence count.
    for doc in &corpus.documents {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for &t in &doc.tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        let mut counted: Vec<(u32, u64)> = counts.into_iter().collect();
        counted.sort_unstable();
        let doc_node = (v + doc.id) as u32;
        for (t, c) in counted {
            edges.push(Edge {
                edge: EdgeRef::new(t, doc_node),
                kind: EdgeKind::TokenDoc,
                weight: c as f64,
                dirs: DIR_FWD | DIR_BWD,
            });
        }
    }
    // Self-loops on every node.
    for u in 0..n as u32 {
        edges.push(Edge {
            edge: EdgeRef::new(u, u),
            kind: EdgeKind::SelfLoop,
            weight: 1.0,
            dirs: DIR_FWD | DIR_BWD,
        });
    }
    edges.sort_unstable_by_key(|e| e.edge);

    assemble(v, d, config, edges)
}

fn assemble(v: usize, d: usize, config: GraphConfig, edges: Vec<Edge>) -> Result<TextGraph> {
    let n = v + d;
    // Expand canonical edges into directed entries.
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
    for e in &edges {
        let (u, w) = (e.edge.u as usize, e.edge.v as usize);
        let value = if config.weighted { e.weight } else { 1.0 };
        if u == w {
            entries.push((u, u, value));
            continue;
        }
        if e.dirs & DIR_FWD != 0 {
            entries.push((u, w, value));
        }
        if e.dirs & DIR_BWD != 0 {
            entries.push((w, u, value));
        }
    }
    entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let adjacency = CsrMatrix::from_sorted_triplets(n, n, &entries)?;
    let normalized = normalize(&adjacency);
    let normalized_t = if config.directed {
        Some(normalized.transpose())
    } else {
        None
    };
    Ok(TextGraph {
        n_tokens: v,
        n_docs: d,
        config,
        edges,
        adjacency,
        normalized,
        normalized_t,
    })
}

/// D^{-1/2} A D^{-1/2} over the row-sum degree diagonal. Self-loops keep
/// every degree positive.
pub fn normalize(a: &CsrMatrix) -> CsrMatrix {
    let mut degree = vec![0.0f64; a.rows];
    for r in 0..a.rows {
        degree[r] = a.row(r).map(|(_, v)| v).sum();
    }
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&dg| if dg > 0.0 { 1.0 / dg.sqrt() } else { 0.0 })
        .collect();
    let mut out = a.clone();
    for r in 0..a.rows {
        let (lo, hi) = (a.row_offsets[r], a.row_offsets[r + 1]);
        for k in lo..hi {
            out.values[k] = a.values[k] * inv_sqrt[r] * inv_sqrt[a.col_indices[k]];
        }
    }
    out
}

/// Adds one document node wired to its (known-vocabulary) tokens, leaving
/// token-token edges and window statistics frozen. Returns a new graph with
/// the added node holding document id `n_docs`.
pub fn attach_document(graph: &TextGraph, tokens: &[u32]) -> Result<TextGraph> {
    let known: Vec<u32> = tokens
        .iter()
        .copied()
        .filter(|&t| (t as usize) < graph.n_tokens)
        .collect();
    if known.is_empty() {
        return Err(Error::NoSharedVocabulary);
    }
    let v = graph.n_tokens;
    let new_node = (v + graph.n_docs) as u32;

    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &t in &known {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut counted: Vec<(u32, u64)> = counts.into_iter().collect();
    counted.sort_unstable();

    let mut edges = graph.edges.clone();
    for &(t, c) in &counted {
        edges.push(Edge {
            edge: EdgeRef::new(t, new_node),
            kind: EdgeKind::TokenDoc,
            weight: c as f64,
            dirs: DIR_FWD | DIR_BWD,
        });
    }
    edges.push(Edge {
        edge: EdgeRef::new(new_node, new_node),
        kind: EdgeKind::SelfLoop,
        weight: 1.0,
        dirs: DIR_FWD | DIR_BWD,
    });
    edges.sort_unstable_by_key(|e| e.edge);

    assemble(v, graph.n_docs + 1, graph.config, edges)
}

/// Rebuilds adjacency + normalization from an edge subset (used by deletion
/// protocols). Self-loops must be present in `edges`.
pub fn graph_from_edges(graph: &TextGraph, edges: Vec<Edge>) -> Result<TextGraph> {
    assemble(graph.n_tokens, graph.n_docs, graph.config, edges)
}

// --- cache format ---------------------------------------------------------

/// Versioned binary cache: header (magic, version, V, D, canonical edge
/// count), CSR arrays of the normalized adjacency with a parallel value
/// array, then the canonical edge table (u, v, kind, weight).
pub fn save_cache(graph: &TextGraph, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(graph.n_tokens as u64).to_le_bytes())?;
    w.write_all(&(graph.n_docs as u64).to_le_bytes())?;
    w.write_all(&(graph.edges.len() as u64).to_le_bytes())?;
    let flags = (graph.config.directed as u8) | ((graph.config.weighted as u8) << 1);
    w.write_all(&[flags])?;
    w.write_all(&(graph.config.window as u64).to_le_bytes())?;

    w.write_all(&(graph.normalized.nnz() as u64).to_le_bytes())?;
    for &off in &graph.normalized.row_offsets {
        w.write_all(&(off as u64).to_le_bytes())?;
    }
    for &c in &graph.normalized.col_indices {
        w.write_all(&(c as u64).to_le_bytes())?;
    }
    for &val in &graph.normalized.values {
        w.write_all(&val.to_bits().to_le_bytes())?;
    }
    // Raw adjacency shares the pattern; store values only.
    for &val in &graph.adjacency.values {
        w.write_all(&val.to_bits().to_le_bytes())?;
    }
    for e in &graph.edges {
        w.write_all(&e.edge.u.to_le_bytes())?;
        w.write_all(&e.edge.v.to_le_bytes())?;
        let kind = match e.kind {
            EdgeKind::TokenToken => 0u8,
            EdgeKind::TokenDoc => 1,
            EdgeKind::SelfLoop => 2,
        };
        w.write_all(&[kind, e.dirs])?;
        w.write_all(&e.weight.to_bits().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<TextGraph> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };

    let magic = cur.take(4)?;
    if magic != CACHE_MAGIC {
        return Err(Error::InvalidCache("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::InvalidCache(format!("unsupported version {version}")));
    }
    let v = cur.u64()? as usize;
    let d = cur.u64()? as usize;
    let n_edges = cur.u64()? as usize;
    let flags = cur.u8()?;
    let window = cur.u64()? as usize;
    let n = v + d;

    let nnz = cur.u64()? as usize;
    let mut row_offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        row_offsets.push(cur.u64()? as usize);
    }
    let mut col_indices = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        col_indices.push(cur.u64()? as usize);
    }
    let mut norm_values = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        norm_values.push(f64::from_bits(cur.u64()?));
    }
    let mut adj_values = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        adj_values.push(f64::from_bits(cur.u64()?));
    }
    let normalized = CsrMatrix::new(n, n, row_offsets.clone(), col_indices.clone(), norm_values)?;
    let adjacency = CsrMatrix::new(n, n, row_offsets, col_indices, adj_values)?;

    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let u = cur.u32()?;
        let vv = cur.u32()?;
        let kind = match cur.u8()? {
            0 => EdgeKind::TokenToken,
            1 => EdgeKind::TokenDoc,
            2 => EdgeKind::SelfLoop,
            k => return Err(Error::InvalidCache(format!("bad edge kind {k}"))),
        };
        let dirs = cur.u8()?;
        let weight = f64::from_bits(cur.u64()?);
        edges.push(Edge {
            edge: EdgeRef { u, v: vv },
            kind,
            weight,
            dirs,
        });
    }

    let config = GraphConfig {
        window,
        directed: flags & 1 != 0,
        weighted: flags & 2 != 0,
    };
    let normalized_t = if config.directed {
        Some(normalized.transpose())
    } else {
        None
    };
    Ok(TextGraph {
        n_tokens: v,
        n_docs: d,
        config,
        edges,
        adjacency,
        normalized,
        normalized_t,
    })
}

/// JSON debug export of the canonical edge list for small graphs.
pub fn export_edges_json(graph: &TextGraph, corpus: &Corpus) -> Result<String> {
    #[derive(Serialize)]
    struct Row<'a> {
        u: String,
        v: String,
        kind: &'a EdgeKind,
        weight: f64,
    }
    let name = |node: u32| -> String {
        if (node as usize) < graph.n_tokens {
            corpus.vocabulary.token(node).to_string()
        } else {
            format!("doc:{}", node as usize - graph.n_tokens)
        }
    };
    let rows: Vec<Row> = graph
        .edges
        .iter()
        .map(|e| Row {
            u: name(e.edge.u),
            v: name(e.edge.v),
            kind: &e.kind,
            weight: e.weight,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::InvalidCache("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, Split};
    use approx::assert_abs_diff_eq;

    fn corpus_of(docs: &[&[&str]]) -> Corpus {
        let token_docs: Vec<Vec<String>> = docs
            .iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect();
        let n = token_docs.len();
        build_corpus(
            token_docs,
            vec![0; n],
            vec![Split::Train; n],
            vec!["human".into()],
            1,
        )
        .unwrap()
    }

    #[test]
    fn single_window_counts() {
        let corpus = corpus_of(&[&["a", "b", "c"]]);
        let stats = count_cooccurrence(&corpus, 3).unwrap();
        assert_eq!(stats.total_windows, 1);
        assert_eq!(stats.token_windows, vec![1, 1, 1]);
        assert_eq!(stats.pair_windows[&(0, 1)].count, 1);
        assert_eq!(stats.pair_windows[&(1, 2)].count, 1);
        assert_eq!(stats.pair_windows[&(0, 2)].count, 1);
    }

    #[test]
    fn repeated_token_windows() {
        // Windows of [a, b, a] at width 2: {a,b}, {b,a}.
        let corpus = corpus_of(&[&["a", "b", "a"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        assert_eq!(stats.total_windows, 2);
        assert_eq!(stats.pair_windows[&(0, 1)].count, 2);
        assert_eq!(stats.token_windows[0], 2);
        assert_eq!(stats.token_windows[1], 2);
    }

    #[test]
    fn short_document_contributes_one_window() {
        let corpus = corpus_of(&[&["a"]]);
        let stats = count_cooccurrence(&corpus, 3).unwrap();
        assert_eq!(stats.total_windows, 1);
        assert_eq!(stats.token_windows[0], 1);
        assert!(stats.pair_windows.is_empty());
    }

    #[test]
    fn window_below_two_is_error() {
        let corpus = corpus_of(&[&["a", "b"]]);
        assert!(count_cooccurrence(&corpus, 1).is_err());
    }

    #[test]
    fn pmi_boundary_no_edge_when_always_cooccurring_once() {
        // One window total, both tokens in it: PMI = ln(1/(1*1)) = 0.
        let corpus = corpus_of(&[&["a", "b"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        assert_abs_diff_eq!(pmi(&stats, 0, 1).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pmi_log2_case() {
        // 4 windows, N_a = N_b = N_ab = 2: PMI = ln(0.5 / 0.25) = ln 2.
        let corpus = corpus_of(&[&["a", "b"], &["a", "b"], &["c", "d"], &["c", "d"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        assert_eq!(stats.total_windows, 4);
        assert_abs_diff_eq!(pmi(&stats, 0, 1).unwrap(), 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn pmi_absent_pair_is_none() {
        let corpus = corpus_of(&[&["a", "b"], &["c", "d"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        assert!(pmi(&stats, 0, 2).is_none());
    }

    #[test]
    fn zero_pmi_pair_gets_no_edge() {
        let corpus = corpus_of(&[&["a", "b"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        // Self-loops x3 plus (a,doc), (b,doc); no (a,b).
        assert_eq!(graph.edges.len(), 5);
        assert!(graph
            .edges
            .iter()
            .all(|e| e.kind != EdgeKind::TokenToken));
    }

    #[test]
    fn token_cooccurring_only_with_itself_gets_no_pair_edge() {
        let corpus = corpus_of(&[&["a", "a", "a"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        let kinds: Vec<EdgeKind> = graph.edges.iter().map(|e| e.kind).collect();
        assert!(!kinds.contains(&EdgeKind::TokenToken));
        assert_eq!(
            kinds.iter().filter(|&&k| k == EdgeKind::TokenDoc).count(),
            1
        );
        assert_eq!(
            kinds.iter().filter(|&&k| k == EdgeKind::SelfLoop).count(),
            2
        );
    }

    #[test]
    fn adjacency_is_symmetric_with_self_loops() {
        let corpus = corpus_of(&[&["a", "b", "c", "a"], &["b", "c", "d"]]);
        let stats = count_cooccurrence(&corpus, 3).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        let a = &graph.adjacency;
        for r in 0..a.rows {
            let mut has_self = false;
            for (c, v) in a.row(r) {
                if c == r {
                    has_self = true;
                }
                let mirrored = a.row(c).find(|&(cc, _)| cc == r).map(|(_, vv)| vv);
                assert_eq!(mirrored, Some(v), "missing mirror of ({r},{c})");
            }
            assert!(has_self, "node {r} lacks a self-loop");
        }
        // Normalized matrix mirrors too.
        let nm = &graph.normalized;
        for r in 0..nm.rows {
            for (c, v) in nm.row(r) {
                let mirrored = nm.row(c).find(|&(cc, _)| cc == r).map(|(_, vv)| vv);
                assert_eq!(mirrored, Some(v));
            }
        }
    }

    #[test]
    fn normalization_matches_degree_scaling_exactly() {
        let corpus = corpus_of(&[&["a", "b", "c"], &["a", "c", "d"], &["b", "d"]]);
        let stats = count_cooccurrence(&corpus, 3).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        let a = &graph.adjacency;
        let deg: Vec<f64> = (0..a.rows).map(|r| a.row(r).map(|(_, v)| v).sum()).collect();
        for r in 0..a.rows {
            for ((c, av), (_, nv)) in a.row(r).zip(graph.normalized.row(r)) {
                let want = av / (deg[r] * deg[c]).sqrt();
                assert_abs_diff_eq!(nv, want, epsilon = 1e-12);
            }
            let row_sum: f64 = graph.normalized.row(r).map(|(_, v)| v).sum();
            assert!(row_sum > 0.0, "row {r}: {row_sum}");
        }
    }

    #[test]
    fn attach_document_wires_known_tokens() {
        let corpus = corpus_of(&[&["a", "b"], &["b", "c"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        let attached = attach_document(&graph, &[0]).unwrap();
        assert_eq!(attached.n_docs, graph.n_docs + 1);
        let new_node = attached.doc_node(graph.n_docs);
        let row: Vec<usize> = attached
            .adjacency
            .row(new_node)
            .map(|(c, _)| c)
            .collect();
        assert_eq!(row, vec![0, new_node]);
    }

    #[test]
    fn attach_identical_document_matches_existing_row_pattern() {
        let corpus = corpus_of(&[&["a", "b"], &["b", "c"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        let attached = attach_document(&graph, &[0, 1]).unwrap();
        let old_row: Vec<usize> = graph
            .adjacency
            .row(graph.doc_node(0))
            .map(|(c, _)| c)
            .filter(|&c| c < graph.n_tokens)
            .collect();
        let new_row: Vec<usize> = attached
            .adjacency
            .row(attached.doc_node(2))
            .map(|(c, _)| c)
            .filter(|&c| c < graph.n_tokens)
            .collect();
        assert_eq!(old_row, new_row);
    }

    #[test]
    fn attach_empty_or_unknown_documents_error() {
        let corpus = corpus_of(&[&["a", "b"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        assert!(attach_document(&graph, &[]).is_err());
        assert!(attach_document(&graph, &[99]).is_err());
    }

    #[test]
    fn cache_round_trip_is_byte_stable() {
        let corpus = corpus_of(&[&["a", "b", "c", "a"], &["b", "c", "d"], &["d", "a"]]);
        let stats = count_cooccurrence(&corpus, 3).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("g1.bin");
        let p2 = dir.path().join("g2.bin");
        save_cache(&graph, &p1).unwrap();
        let loaded = load_cache(&p1).unwrap();
        save_cache(&loaded, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        assert_eq!(loaded.n_tokens, graph.n_tokens);
        assert_eq!(loaded.edges.len(), graph.edges.len());
    }

    #[test]
    fn weighted_variant_uses_counts_and_pmi() {
        let corpus = corpus_of(&[&["a", "b", "a"], &["a", "b"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        let config = GraphConfig {
            weighted: true,
            ..Default::default()
        };
        let graph = build_graph_with(&corpus, &stats, config).unwrap();
        let doc0 = graph.doc_node(0);
        let w = graph
            .adjacency
            .row(doc0)
            .find(|&(c, _)| c == 0)
            .map(|(_, v)| v)
            .unwrap();
        assert_eq!(w, 2.0, "token-doc weight should be the occurrence count");
    }

    #[test]
    fn pmi_never_decreases_when_a_joint_window_is_added_to_a_sparse_pair() {
        // Unconditional monotonicity is false (take N_i = N_j = N_ij: extra
        // joint windows dilute an always-co-occurring pair); in the sparse
        // regime N_ij <= N_i N_j / (N_i + N_j + 1) the increase is provable.
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(2u64..80, 2u64..80, 1u64..40, 100u64..400),
                |(ni, nj, nij_raw, total)| {
                    let cap = ni * nj / (ni + nj + 1);
                    prop_assume!(cap >= 1);
                    let nij = nij_raw.min(cap).min(ni).min(nj);
                    let mk = |ni, nj, nij, total| {
                        let mut pair_windows = HashMap::new();
                        pair_windows.insert(
                            (0u32, 1u32),
                            PairStat {
                                count: nij,
                                first_before_second: true,
                                second_before_first: false,
                            },
                        );
                        CooccurrenceStats {
                            window: 3,
                            total_windows: total,
                            token_windows: vec![ni, nj],
                            pair_windows,
                        }
                    };
                    let before = pmi(&mk(ni, nj, nij, total), 0, 1).unwrap();
                    // One more window containing both tokens and nothing new.
                    let after = pmi(&mk(ni + 1, nj + 1, nij + 1, total + 1), 0, 1).unwrap();
                    prop_assert!(after >= before - 1e-12, "{before} -> {after}");
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn directed_variant_orients_token_token_edges() {
        // "a" always precedes "b"; directed mode keeps only a -> b.
        let corpus = corpus_of(&[&["a", "b"], &["a", "b"], &["a", "b"], &["c", "c"]]);
        let stats = count_cooccurrence(&corpus, 2).unwrap();
        let config = GraphConfig {
            directed: true,
            ..Default::default()
        };
        let graph = build_graph_with(&corpus, &stats, config).unwrap();
        let fwd = graph.adjacency.row(0).any(|(c, _)| c == 1);
        let bwd = graph.adjacency.row(1).any(|(c, _)| c == 0);
        assert!(fwd && !bwd);
    }
}
