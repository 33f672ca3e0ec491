//! Shared fixtures for the criterion benchmarks.

use graphmotif_core::corpus::Corpus;
use graphmotif_core::gcn::{train, GcnModel, TrainConfig};
use graphmotif_core::graph::{build_graph, count_cooccurrence, TextGraph};
use graphmotif_core::synthetic::{sample_planted, PlantedMotifSpec};

/// A mid-sized planted corpus with its graph, representative of the
/// synthetic workloads the pipeline runs on.
pub fn planted_fixture(n_per_class: usize) -> (Corpus, TextGraph) {
    let spec = PlantedMotifSpec::default();
    let corpus = sample_planted(&spec, n_per_class, 7).expect("corpus");
    let stats = count_cooccurrence(&corpus, 3).expect("stats");
    let graph = build_graph(&corpus, &stats).expect("graph");
    (corpus, graph)
}

/// A briefly trained detector over the fixture (enough for non-degenerate
/// explainer work, not tuned for accuracy).
pub fn trained_fixture(n_per_class: usize) -> (Corpus, TextGraph, GcnModel) {
    let (corpus, graph) = planted_fixture(n_per_class);
    let config = TrainConfig {
        epochs: 50,
        learning_rate: 2e-2,
        hidden: 16,
        ..Default::default()
    };
    let model = train(&graph, &corpus, &config).expect("train").model;
    (corpus, graph, model)
}
