//! One function per subcommand; all file layout lives here.
//!
//! Primary outputs (caches, checkpoints, reports, CSVs) are byte-stable for
//! a fixed seed and thread count; wall-clock metadata goes only to the
//! `checkpoint.meta.json` sidecar.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use graphmotif_core::corpus::{tokens_for_existing_vocab, Corpus, Split};
use graphmotif_core::explainer::{
    explain_node, explain_node_with_target, extract_motifs, fingerprint_stats, global_motif,
    mean_importance, motif_to_dot, motif_to_json, EdgeMask, ExplainTarget, Granularity,
};
use graphmotif_core::faithfulness::{
    curves_to_csv, random_baseline, run_deletion, DeletionCurve, Protocol,
};
use graphmotif_core::gcn::{
    self, auc, load_checkpoint, predict as gcn_predict, save_checkpoint, GcnModel,
};
use graphmotif_core::graph::{
    attach_document, build_graph_with, count_cooccurrence, export_edges_json, load_cache,
    save_cache, EdgeRef, TextGraph,
};
use graphmotif_core::synthetic::run_detector_comparison;

use crate::config::RunConfig;
use crate::CliError;

fn corpus_path(config: &RunConfig) -> PathBuf {
    config.paths.cache_dir.join("corpus.json")
}

fn graph_path(config: &RunConfig) -> PathBuf {
    config.paths.cache_dir.join("graph.bin")
}

fn checkpoint_path(config: &RunConfig) -> PathBuf {
    config.paths.output_dir.join("checkpoint.bin")
}

fn importance_path(config: &RunConfig) -> PathBuf {
    config.paths.output_dir.join("importance.csv")
}

fn load_caches(config: &RunConfig) -> Result<(Corpus, TextGraph), CliError> {
    let cp = corpus_path(config);
    let gp = graph_path(config);
    if !cp.exists() || !gp.exists() {
        return Err(CliError::Config(format!(
            "graph cache missing under {:?}; run `graphmotif build-graph` first",
            config.paths.cache_dir
        )));
    }
    let corpus = Corpus::load(&cp)?;
    let graph = load_cache(&gp)?;
    if corpus.n_docs() != graph.n_docs || corpus.vocabulary.len() != graph.n_tokens {
        return Err(CliError::Config(format!(
            "stale cache under {:?}: corpus has {} docs / {} tokens but the graph \
             has {} / {}; rerun `graphmotif build-graph`",
            config.paths.cache_dir,
            corpus.n_docs(),
            corpus.vocabulary.len(),
            graph.n_docs,
            graph.n_tokens
        )));
    }
    Ok((corpus, graph))
}

fn class_name(corpus: &Corpus, class: usize) -> String {
    corpus
        .class_names
        .get(class)
        .cloned()
        .unwrap_or_else(|| format!("class{class}"))
}

fn load_model(config: &RunConfig) -> Result<GcnModel, CliError> {
    let path = checkpoint_path(config);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "checkpoint missing at {path:?}; run `graphmotif train` first"
        )));
    }
    Ok(load_checkpoint(&path)?.0)
}

pub fn build_graph(config: &RunConfig) -> Result<(), CliError> {
    let dataset = config
        .paths
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Config("paths.dataset is not set".into()))?;
    if !dataset.exists() {
        return Err(CliError::Config(format!("dataset {dataset:?} not found")));
    }
    fs::create_dir_all(&config.paths.cache_dir)?;

    let corpus = graphmotif_core::corpus::load_jsonl(dataset, &config.ingest()?)?;
    let stats = count_cooccurrence(&corpus, config.graph.window)?;
    let graph = build_graph_with(&corpus, &stats, config.graph_config())?;

    corpus.save(&corpus_path(config))?;
    save_cache(&graph, &graph_path(config))?;
    if config.graph.debug_json || graph.edges.len() <= 2000 {
        fs::write(
            config.paths.cache_dir.join("graph.edges.json"),
            export_edges_json(&graph, &corpus)?,
        )?;
    }

    println!(
        "nodes={} (tokens={} docs={}) edges={} (adjacency entries={})",
        graph.n_nodes(),
        graph.n_tokens,
        graph.n_docs,
        graph.edges.len(),
        graph.adjacency.nnz()
    );
    Ok(())
}

#[derive(Serialize)]
struct Metrics {
    train_accuracy: f64,
    val_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    test_auc: Option<f64>,
    final_loss: f64,
    epochs_run: usize,
    loss_trace: Vec<f64>,
}

fn split_accuracy(
    graph: &TextGraph,
    model: &GcnModel,
    corpus: &Corpus,
    split: Split,
) -> Result<Option<f64>, CliError> {
    let labeled: Vec<(usize, usize)> = corpus
        .docs_in(split)
        .filter_map(|d| d.label.map(|l| (d.id, l)))
        .collect();
    if labeled.is_empty() {
        return Ok(None);
    }
    let ids: Vec<usize> = labeled.iter().map(|&(id, _)| id).collect();
    let pred = gcn_predict(graph, model, &ids)?;
    let hits = pred
        .classes
        .iter()
        .zip(labeled.iter())
        .filter(|(&c, &(_, l))| c == l)
        .count();
    Ok(Some(hits as f64 / labeled.len() as f64))
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let (corpus, graph) = load_caches(config)?;
    fs::create_dir_all(&config.paths.output_dir)?;

    let train_config = config.train_config()?;
    let outcome = gcn::train(&graph, &corpus, &train_config)?;
    let model = outcome.model;

    let train_acc = split_accuracy(&graph, &model, &corpus, Split::Train)?.unwrap_or(0.0);
    let val_acc = split_accuracy(&graph, &model, &corpus, Split::Val)?;
    let test_acc = split_accuracy(&graph, &model, &corpus, Split::Test)?;
    let test_auc = if corpus.n_classes() == 2 {
        let labeled: Vec<(usize, usize)> = corpus
            .docs_in(Split::Test)
            .filter_map(|d| d.label.map(|l| (d.id, l)))
            .collect();
        if labeled.is_empty() {
            None
        } else {
            let ids: Vec<usize> = labeled.iter().map(|&(id, _)| id).collect();
            let pred = gcn_predict(&graph, &model, &ids)?;
            let labels: Vec<usize> = labeled.iter().map(|&(_, l)| l).collect();
            auc(&pred.machine_scores, &labels).ok()
        }
    } else {
        None
    };

    save_checkpoint(&model, graph.n_docs, &checkpoint_path(config))?;
    let metrics = Metrics {
        train_accuracy: train_acc,
        val_accuracy: val_acc,
        test_accuracy: test_acc,
        test_auc,
        final_loss: outcome.trace.last().map(|e| e.loss).unwrap_or(f64::NAN),
        epochs_run: outcome.trace.len(),
        loss_trace: outcome.trace.iter().map(|e| e.loss).collect(),
    };
    fs::write(
        config.paths.output_dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics).map_err(anyhow::Error::new)?,
    )?;

    // Wall-clock info stays out of the primary outputs; the sidecar echoes
    // the run settings and headline numbers next to the checkpoint.
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let sidecar = serde_json::json!({
        "seed": config.seed,
        "epochs": train_config.epochs,
        "hidden": train_config.hidden,
        "learning_rate": train_config.learning_rate,
        "weight_decay": train_config.weight_decay,
        "train_accuracy": metrics.train_accuracy,
        "val_accuracy": metrics.val_accuracy,
        "test_accuracy": metrics.test_accuracy,
        "test_auc": metrics.test_auc,
        "final_loss": metrics.final_loss,
        "unix_time": stamp,
    });
    fs::write(
        config.paths.output_dir.join("checkpoint.meta.json"),
        serde_json::to_string_pretty(&sidecar).map_err(anyhow::Error::new)?,
    )?;

    println!(
        "train_acc={train_acc:.4} val_acc={} test_acc={} auc={} final_loss={:.6}",
        val_acc.map_or("n/a".into(), |v| format!("{v:.4}")),
        test_acc.map_or("n/a".into(), |v| format!("{v:.4}")),
        test_auc.map_or("n/a".into(), |v| format!("{v:.4}")),
        metrics.final_loss
    );
    Ok(())
}

#[derive(Deserialize)]
struct PredictRecord {
    text: String,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Serialize)]
struct PredictionRow {
    source: String,
    class: usize,
    class_name: String,
    machine_score: f64,
    probs: Vec<f64>,
    given_label: Option<String>,
}

pub fn predict(
    config: &RunConfig,
    doc_ids: &[usize],
    input: Option<PathBuf>,
) -> Result<(), CliError> {
    let (corpus, graph) = load_caches(config)?;
    let model = load_model(config)?;
    fs::create_dir_all(&config.paths.output_dir)?;
    let mut rows: Vec<PredictionRow> = Vec::new();

    if !doc_ids.is_empty() {
        let pred = gcn_predict(&graph, &model, doc_ids)?;
        for (i, &id) in doc_ids.iter().enumerate() {
            rows.push(PredictionRow {
                source: format!("doc:{id}"),
                class: pred.classes[i],
                class_name: class_name(&corpus, pred.classes[i]),
                machine_score: pred.machine_scores[i],
                probs: pred.probs[i].clone(),
                given_label: None,
            });
        }
    }

    if let Some(path) = input {
        if !path.exists() {
            return Err(CliError::Config(format!("input {path:?} not found")));
        }
        let tokenizer = config.tokenizer()?;
        let reader = BufReader::new(fs::File::open(&path)?);
        let mut current = graph;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: PredictRecord = serde_json::from_str(&line).map_err(|e| {
                CliError::Config(format!("line {}: {e}", idx + 1))
            })?;
            let tokens = tokens_for_existing_vocab(&record.text, &tokenizer, &corpus.vocabulary);
            let attached = attach_document(&current, &tokens)?;
            let new_doc = attached.n_docs - 1;
            let pred = gcn_predict(&attached, &model, &[new_doc])?;
            rows.push(PredictionRow {
                source: format!("{}:{}", path.display(), idx + 1),
                class: pred.classes[0],
                class_name: class_name(&corpus, pred.classes[0]),
                machine_score: pred.machine_scores[0],
                probs: pred.probs[0].clone(),
                given_label: record.label,
            });
            current = attached;
        }
    }

    if rows.is_empty() {
        return Err(CliError::Config(
            "nothing to predict: pass --doc-ids or --input".into(),
        ));
    }
    let out = config.paths.output_dir.join("predictions.json");
    fs::write(
        &out,
        serde_json::to_string_pretty(&rows).map_err(anyhow::Error::new)?,
    )?;
    for row in &rows {
        println!(
            "{} -> {} (machine_score={:.4})",
            row.source, row.class_name, row.machine_score
        );
    }
    Ok(())
}

fn write_motif_files(
    dir: &Path,
    stem: &str,
    motif: &graphmotif_core::explainer::Motif,
    graph: &TextGraph,
    corpus: &Corpus,
    config: &RunConfig,
) -> Result<(), CliError> {
    let explain_config = config.explain_config()?;
    fs::write(
        dir.join(format!("{stem}.dot")),
        motif_to_dot(motif, graph, corpus),
    )?;
    fs::write(
        dir.join(format!("{stem}.json")),
        motif_to_json(motif, graph, corpus, &explain_config)?,
    )?;
    Ok(())
}

fn scope_docs(corpus: &Corpus, scope: &str) -> Result<Vec<usize>, CliError> {
    let docs: Vec<usize> = match scope {
        "test" => corpus.docs_in(Split::Test).map(|d| d.id).collect(),
        "train" => corpus.docs_in(Split::Train).map(|d| d.id).collect(),
        "all" => corpus.documents.iter().map(|d| d.id).collect(),
        other => {
            return Err(CliError::Config(format!(
                "unknown explain scope {other:?}"
            )))
        }
    };
    Ok(docs)
}

fn explain_one(
    graph: &TextGraph,
    model: &GcnModel,
    corpus: &Corpus,
    doc: usize,
    config: &RunConfig,
) -> Result<EdgeMask, CliError> {
    let explain_config = config.explain_config()?;
    let mask = if explain_config.target == ExplainTarget::Label {
        let label = corpus.documents[doc].label.ok_or_else(|| {
            CliError::Config(format!("doc {doc} has no label for label-target mode"))
        })?;
        explain_node_with_target(graph, model, doc, &explain_config, Some(label))?
    } else {
        explain_node(graph, model, doc, &explain_config)?
    };
    Ok(mask)
}

pub fn explain(config: &RunConfig, doc_ids: &[usize], global: bool) -> Result<(), CliError> {
    let (corpus, graph) = load_caches(config)?;
    let model = load_model(config)?;
    let explain_config = config.explain_config()?;
    let motif_dir = config.paths.output_dir.join("motifs");
    fs::create_dir_all(&motif_dir)?;

    for &doc in doc_ids {
        if doc >= graph.n_docs {
            return Err(CliError::Config(format!(
                "unknown doc id {doc} (valid range 0..{})",
                graph.n_docs
            )));
        }
        let mask = explain_one(&graph, &model, &corpus, doc, config)?;
        for granularity in [Granularity::WordLevel, Granularity::HighOrder] {
            let motif = extract_motifs(&mask, &graph, granularity, &explain_config)?;
            let tag = match granularity {
                Granularity::WordLevel => "word-level",
                Granularity::HighOrder => "high-order",
                Granularity::Global => unreachable!(),
            };
            write_motif_files(
                &motif_dir,
                &format!("doc{doc}.{tag}"),
                &motif,
                &graph,
                &corpus,
                config,
            )?;
        }
        println!("doc {doc}: motifs written to {motif_dir:?}");
    }

    if global {
        let docs = scope_docs(&corpus, &config.explain.scope)?;
        let masks: Vec<EdgeMask> = docs
            .iter()
            .map(|&d| explain_one(&graph, &model, &corpus, d, config))
            .collect::<Result<_, _>>()?;
        let motif = global_motif(&masks, &graph, explain_config.global_ratio)?;
        write_motif_files(&motif_dir, "global", &motif, &graph, &corpus, config)?;

        // Fingerprint table in the published shape.
        let rows = fingerprint_stats(&motif, &corpus, graph.n_tokens, graph.config.window);
        let mut csv = String::from("class,token_docs,edge_docs,ratio\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.class,
                row.token_docs,
                row.edge_docs,
                row.ratio.map_or("undef".into(), |r| format!("{r:.2}"))
            ));
        }
        fs::write(config.paths.output_dir.join("fingerprint.csv"), csv)?;

        // Per-edge mean importance feeds the faithfulness command.
        let importance = mean_importance(&masks);
        let mut sorted: Vec<(EdgeRef, f64)> = importance.into_iter().collect();
        sorted.sort_by_key(|&(e, _)| e);
        let mut csv = String::from("u,v,score\n");
        for (e, score) in sorted {
            csv.push_str(&format!("{},{},{score}\n", e.u, e.v));
        }
        fs::write(importance_path(config), csv)?;
        println!(
            "global motif over {} masks: {} edges; fingerprint + importance written",
            masks.len(),
            motif.edges.len()
        );
    }
    Ok(())
}

fn load_importance(path: &Path) -> Result<std::collections::HashMap<EdgeRef, f64>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut map = std::collections::HashMap::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!(
                "importance file line {}: expected u,v,score",
                idx + 1
            )));
        }
        let u: u32 = parts[0].parse().map_err(|_| {
            CliError::Config(format!("importance file line {}: bad node id", idx + 1))
        })?;
        let v: u32 = parts[1].parse().map_err(|_| {
            CliError::Config(format!("importance file line {}: bad node id", idx + 1))
        })?;
        let score: f64 = parts[2].parse().map_err(|_| {
            CliError::Config(format!("importance file line {}: bad score", idx + 1))
        })?;
        map.insert(EdgeRef::new(u, v), score);
    }
    Ok(map)
}

pub fn faithfulness(config: &RunConfig) -> Result<(), CliError> {
    let (corpus, graph) = load_caches(config)?;
    let model = load_model(config)?;
    let imp_path = importance_path(config);
    if !imp_path.exists() {
        return Err(CliError::Config(format!(
            "importance file missing at {imp_path:?}; run `graphmotif explain --global` first"
        )));
    }
    let importance = load_importance(&imp_path)?;
    let scope = config.removal_scope()?;
    let dir = config.paths.output_dir.join("faithfulness");
    fs::create_dir_all(&dir)?;

    let seeds: Vec<u64> = (0..config.faithfulness.random_seeds as u64)
        .map(|i| config.seed + i)
        .collect();
    for name in &config.faithfulness.protocols {
        let protocol = match name.as_str() {
            "morf" => Protocol::Morf,
            "lerf" => Protocol::Lerf,
            other => return Err(CliError::Config(format!("unknown protocol {other:?}"))),
        };
        let explainer_curve = run_deletion(
            &graph,
            &model,
            &corpus,
            &importance,
            protocol,
            &config.faithfulness.fractions,
            scope,
        )?;
        let baseline = random_baseline(
            &graph,
            &model,
            &corpus,
            protocol,
            &config.faithfulness.fractions,
            scope,
            &seeds,
        )?;
        let mut rows: Vec<(String, &DeletionCurve)> =
            vec![("explainer".into(), &explainer_curve)];
        for curve in &baseline.per_seed {
            rows.push((format!("random:{}", curve.seed.unwrap()), curve));
        }
        rows.push(("random-mean".into(), &baseline.mean));
        fs::write(dir.join(format!("{name}.csv")), curves_to_csv(&rows))?;
        println!(
            "{name}: explainer auc={:.4} random-mean auc={:.4}",
            explainer_curve.auc, baseline.mean.auc
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct AccuracySummary {
    mean: f64,
    sd: f64,
    per_seed: Vec<f64>,
}

fn summarize(values: &[f64]) -> AccuracySummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    AccuracySummary {
        mean,
        sd: var.sqrt(),
        per_seed: values.to_vec(),
    }
}

#[derive(Serialize)]
struct SynthReport {
    length: usize,
    context: usize,
    n_per_class: usize,
    test_per_class: usize,
    esb_mode: String,
    seeds: Vec<u64>,
    esb_accuracy: AccuracySummary,
    pgb_accuracy: AccuracySummary,
    degenerate: bool,
}

pub fn synth(config: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.paths.output_dir)?;
    let comparison = config.comparison_config()?;
    if comparison.context >= comparison.length {
        eprintln!(
            "warning: context {} >= length {}; the comparison degenerates \
             (both detectors see the terminal token)",
            comparison.context, comparison.length
        );
    }
    let seeds: Vec<u64> = (0..config.synth.seeds as u64)
        .map(|i| config.seed + i)
        .collect();
    let mut esb = Vec::new();
    let mut pgb = Vec::new();
    for &seed in &seeds {
        let report = run_detector_comparison(&comparison, seed)?;
        println!(
            "seed {seed}: esb={:.4} pgb={:.4}",
            report.esb_accuracy, report.pgb_accuracy
        );
        esb.push(report.esb_accuracy);
        pgb.push(report.pgb_accuracy);
    }
    let report = SynthReport {
        length: comparison.length,
        context: comparison.context,
        n_per_class: comparison.n_per_class,
        test_per_class: comparison.test_per_class,
        esb_mode: config.synth.esb_mode.clone(),
        seeds,
        esb_accuracy: summarize(&esb),
        pgb_accuracy: summarize(&pgb),
        degenerate: comparison.context >= comparison.length,
    };
    fs::write(
        config.paths.output_dir.join("synth_report.json"),
        serde_json::to_string_pretty(&report).map_err(anyhow::Error::new)?,
    )?;
    println!(
        "esb mean={:.4} sd={:.4} | pgb mean={:.4} sd={:.4}",
        report.esb_accuracy.mean,
        report.esb_accuracy.sd,
        report.pgb_accuracy.mean,
        report.pgb_accuracy.sd
    );
    Ok(())
}
