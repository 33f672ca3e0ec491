//! Deletion-curve evaluation of explanation faithfulness.
//!
//! Edges are removed in importance order (most relevant first, or least
//! relevant first), the adjacency is renormalized on the surviving graph,
//! and the frozen model is re-run; test-document accuracy traced over the
//! removal fractions gives the curve. Self-loops are never removed, so every
//! curve starts at the unperturbed accuracy. A random-importance baseline
//! calibrates both protocols.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::gcn::{test_accuracy, GcnModel};
use crate::graph::{graph_from_edges, Edge, EdgeKind, EdgeRef, TextGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Most relevant first; lower area is better.
    Morf,
    /// Least relevant first; higher area is better.
    Lerf,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::Morf => write!(f, "morf"),
            Protocol::Lerf => write!(f, "lerf"),
        }
    }
}

/// Which edge kinds the protocol may remove.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalScope {
    All,
    TokenTokenOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeletionCurve {
    pub protocol: Protocol,
    pub fractions: Vec<f64>,
    pub accuracies: Vec<f64>,
    /// Trapezoidal area normalized by the fraction span.
    pub auc: f64,
    /// Seed of the random baseline that produced this curve, if any.
    pub seed: Option<u64>,
}

fn validate_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::InvalidConfig("empty fraction grid".into()));
    }
    if fractions[0] != 0.0 {
        return Err(Error::InvalidConfig(
            "fraction grid must start at 0".into(),
        ));
    }
    for w in fractions.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidConfig(
                "fractions must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&f) = fractions.iter().find(|&&f| !(0.0..=1.0).contains(&f)) {
        return Err(Error::InvalidFraction(f));
    }
    Ok(())
}

fn trapezoid_auc(fractions: &[f64], accuracies: &[f64]) -> f64 {
    if fractions.len() < 2 {
        return accuracies.first().copied().unwrap_or(0.0);
    }
    let mut area = 0.0;
    for i in 1..fractions.len() {
        let width = fractions[i] - fractions[i - 1];
        area += width * (accuracies[i] + accuracies[i - 1]) / 2.0;
    }
    area / (fractions[fractions.len() - 1] - fractions[0])
}

/// Removable edges under the scope, in canonical order.
fn removable(graph: &TextGraph, scope: RemovalScope) -> Vec<&Edge> {
    graph
        .removable_edges()
        .filter(|e| match scope {
            RemovalScope::All => true,
            RemovalScope::TokenTokenOnly => e.kind == EdgeKind::TokenToken,
        })
        .collect()
}

/// The exact edge set a protocol removes at one fraction: top (or bottom)
/// `round(fraction * n)` edges by score, ties broken by canonical order.
pub fn removal_set(
    graph: &TextGraph,
    importance: &HashMap<EdgeRef, f64>,
    protocol: Protocol,
    fraction: f64,
    scope: RemovalScope,
) -> Result<Vec<EdgeRef>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidFraction(fraction));
    }
    let candidates = removable(graph, scope);
    let mut order: Vec<(EdgeRef, f64)> = candidates
        .iter()
        .map(|e| (e.edge, importance.get(&e.edge).copied().unwrap_or(0.0)))
        .collect();
    match protocol {
        Protocol::Morf => order.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0))
        }),
        Protocol::Lerf => order.sort_by(|a, b| {
            a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0))
        }),
    }
    let k = ((fraction * order.len() as f64).round() as usize).min(order.len());
    Ok(order.into_iter().take(k).map(|(e, _)| e).collect())
}

/// Runs one deletion protocol over the fraction grid. Edges missing from
/// `importance` score zero; the model is never mutated.
pub fn run_deletion(
    graph: &TextGraph,
    model: &GcnModel,
    corpus: &Corpus,
    importance: &HashMap<EdgeRef, f64>,
    protocol: Protocol,
    fractions: &[f64],
    scope: RemovalScope,
) -> Result<DeletionCurve> {
    validate_fractions(fractions)?;
    let accuracies: Vec<f64> = fractions
        .par_iter()
        .map(|&fraction| -> Result<f64> {
            let removed: HashSet<EdgeRef> =
                removal_set(graph, importance, protocol, fraction, scope)?
                    .into_iter()
                    .collect();
            let surviving: Vec<Edge> = graph
                .edges
                .iter()
                .copied()
                .filter(|e| !removed.contains(&e.edge))
                .collect();
            let perturbed = graph_from_edges(graph, surviving)?;
            test_accuracy(&perturbed, model, corpus)
        })
        .collect::<Result<Vec<f64>>>()?;
    let auc = trapezoid_auc(fractions, &accuracies);
    Ok(DeletionCurve {
        protocol,
        fractions: fractions.to_vec(),
        accuracies,
        auc,
        seed: None,
    })
}

#[derive(Debug, Clone)]
pub struct RandomBaseline {
    pub mean: DeletionCurve,
    pub per_seed: Vec<DeletionCurve>,
}

/// Uniform-random edge importance, one curve per seed, averaged pointwise.
pub fn random_baseline(
    graph: &TextGraph,
    model: &GcnModel,
    corpus: &Corpus,
    protocol: Protocol,
    fractions: &[f64],
    scope: RemovalScope,
    seeds: &[u64],
) -> Result<RandomBaseline> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "random baseline needs at least one seed".into(),
        ));
    }
    let per_seed: Vec<DeletionCurve> = seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Canonical edge order fixes the score assignment.
            let importance: HashMap<EdgeRef, f64> = graph
                .removable_edges()
                .map(|e| (e.edge, rng.gen::<f64>()))
                .collect();
            let mut curve =
                run_deletion(graph, model, corpus, &importance, protocol, fractions, scope)?;
            curve.seed = Some(seed);
            Ok(curve)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean_acc = vec![0.0f64; fractions.len()];
    for curve in &per_seed {
        for (m, &a) in mean_acc.iter_mut().zip(&curve.accuracies) {
            *m += a;
        }
    }
    for m in mean_acc.iter_mut() {
        *m /= per_seed.len() as f64;
    }
    let auc = trapezoid_auc(fractions, &mean_acc);
    Ok(RandomBaseline {
        mean: DeletionCurve {
            protocol,
            fractions: fractions.to_vec(),
            accuracies: mean_acc,
            auc,
            seed: None,
        },
        per_seed,
    })
}

/// CSV rows: protocol, fraction, accuracy, seed label; one summary row per
/// curve carries the AUC in the fraction column.
pub fn curves_to_csv(rows: &[(String, &DeletionCurve)]) -> String {
    let mut out = String::from("protocol,fraction,accuracy,seed\n");
    for (label, curve) in rows {
        for (f, a) in curve.fractions.iter().zip(&curve.accuracies) {
            out.push_str(&format!("{},{f},{a},{label}\n", curve.protocol));
        }
        out.push_str(&format!("{},auc,{},{label}\n", curve.protocol, curve.auc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use crate::gcn::{predict, train, TrainConfig};
    use crate::graph::{build_graph, count_cooccurrence};
    use crate::synthetic::sample_separable;

    fn trained_setup(seed: u64) -> (Corpus, TextGraph, GcnModel) {
        let corpus = sample_separable(12, 8, 40, seed).unwrap();
        let stats = count_cooccurrence(&corpus, 3).unwrap();
        let graph = build_graph(&corpus, &stats).unwrap();
        let config = TrainConfig {
            epochs: 200,
            hidden: 8,
            seed,
            ..Default::default()
        };
        let model = train(&graph, &corpus, &config).unwrap().model;
        (corpus, graph, model)
    }

    fn grid() -> Vec<f64> {
        (0..10).map(|i| i as f64 / 10.0).collect()
    }

    #[test]
    fn curve_starts_at_unperturbed_accuracy() {
        let (corpus, graph, model) = trained_setup(3);
        let importance = HashMap::new();
        let curve = run_deletion(
            &graph,
            &model,
            &corpus,
            &importance,
            Protocol::Morf,
            &grid(),
            RemovalScope::All,
        )
        .unwrap();
        let test_ids: Vec<usize> = corpus.docs_in(Split::Test).map(|d| d.id).collect();
        let baseline = predict(&graph, &model, &test_ids).unwrap();
        let labels: Vec<usize> = corpus
            .docs_in(Split::Test)
            .map(|d| d.label.unwrap())
            .collect();
        let acc = baseline
            .classes
            .iter()
            .zip(&labels)
            .filter(|(a, b)| a == b)
            .count() as f64
            / labels.len() as f64;
        assert_eq!(curve.accuracies[0], acc);
    }

    #[test]
    fn single_zero_fraction_equals_baseline() {
        let (corpus, graph, model) = trained_setup(5);
        let curve = run_deletion(
            &graph,
            &model,
            &corpus,
            &HashMap::new(),
            Protocol::Lerf,
            &[0.0],
            RemovalScope::All,
        )
        .unwrap();
        assert_eq!(curve.accuracies.len(), 1);
        assert_eq!(curve.auc, curve.accuracies[0]);
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let (corpus, graph, model) = trained_setup(7);
        for bad in [vec![0.1, 0.2], vec![0.0, 0.0], vec![0.0, 1.5]] {
            assert!(run_deletion(
                &graph,
                &model,
                &corpus,
                &HashMap::new(),
                Protocol::Morf,
                &bad,
                RemovalScope::All,
            )
            .is_err());
        }
    }

    #[test]
    fn full_removal_isolates_documents_at_chance() {
        // Balanced test split; isolated document rows produce uniform
        // logits, argmax falls to class 0, accuracy lands at one half.
        for seed in [1u64, 2, 3, 4, 5] {
            let (corpus, graph, model) = trained_setup(seed);
            let curve = run_deletion(
                &graph,
                &model,
                &corpus,
                &HashMap::new(),
                Protocol::Morf,
                &[0.0, 1.0],
                RemovalScope::All,
            )
            .unwrap();
            let last = *curve.accuracies.last().unwrap();
            assert!((last - 0.5).abs() <= 0.05, "seed {seed}: {last}");
        }
    }

    #[test]
    fn morf_removal_complements_lerf_at_mirrored_fraction() {
        let (_corpus, graph, _model) = trained_setup(11);
        // Distinct scores per edge.
        let importance: HashMap<EdgeRef, f64> = graph
            .removable_edges()
            .enumerate()
            .map(|(i, e)| (e.edge, i as f64 * 0.001 + 0.01))
            .collect();
        let n = graph.removable_edges().count();
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            // Keep k(rho) + k(1 - rho) = n exact for the check.
            if (rho * n as f64).fract() == 0.5 {
                continue;
            }
            let removed_morf: HashSet<EdgeRef> =
                removal_set(&graph, &importance, Protocol::Morf, rho, RemovalScope::All)
                    .unwrap()
                    .into_iter()
                    .collect();
            let removed_lerf: HashSet<EdgeRef> = removal_set(
                &graph,
                &importance,
                Protocol::Lerf,
                1.0 - rho,
                RemovalScope::All,
            )
            .unwrap()
            .into_iter()
            .collect();
            assert_eq!(removed_morf.len() + removed_lerf.len(), n);
            assert!(removed_morf.is_disjoint(&removed_lerf));
        }
    }

    #[test]
    fn model_bits_survive_deletion_runs() {
        let (corpus, graph, model) = trained_setup(13);
        let before: Vec<u64> = model.w1.data.iter().map(|v| v.to_bits()).collect();
        let _ = run_deletion(
            &graph,
            &model,
            &corpus,
            &HashMap::new(),
            Protocol::Morf,
            &grid(),
            RemovalScope::All,
        )
        .unwrap();
        let after: Vec<u64> = model.w1.data.iter().map(|v| v.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn random_morf_and_lerf_agree_in_expectation() {
        let (corpus, graph, model) = trained_setup(17);
        let seeds: Vec<u64> = (0..8).collect();
        let morf = random_baseline(
            &graph,
            &model,
            &corpus,
            Protocol::Morf,
            &grid(),
            RemovalScope::All,
            &seeds,
        )
        .unwrap();
        let lerf = random_baseline(
            &graph,
            &model,
            &corpus,
            Protocol::Lerf,
            &grid(),
            RemovalScope::All,
            &seeds,
        )
        .unwrap();
        assert!(
            (morf.mean.auc - lerf.mean.auc).abs() < 0.15,
            "morf {} vs lerf {}",
            morf.mean.auc,
            lerf.mean.auc
        );
        assert_eq!(morf.per_seed.len(), seeds.len());
    }

    #[test]
    fn single_seed_baseline_is_one_run() {
        let (corpus, graph, model) = trained_setup(19);
        let rb = random_baseline(
            &graph,
            &model,
            &corpus,
            Protocol::Morf,
            &[0.0, 0.5],
            RemovalScope::All,
            &[42],
        )
        .unwrap();
        assert_eq!(rb.per_seed.len(), 1);
        assert_eq!(rb.mean.accuracies, rb.per_seed[0].accuracies);
    }

    #[test]
    fn csv_shape() {
        let curve = DeletionCurve {
            protocol: Protocol::Morf,
            fractions: vec![0.0, 0.5],
            accuracies: vec![1.0, 0.75],
            auc: 0.875,
            seed: None,
        };
        let csv = curves_to_csv(&[("explainer".into(), &curve)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "protocol,fraction,accuracy,seed");
        assert_eq!(lines[1], "morf,0,1,explainer");
        assert_eq!(lines[3], "morf,auc,0.875,explainer");
    }
}
