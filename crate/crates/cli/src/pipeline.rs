//! File-to-file pipeline stages. Each stage loads its inputs from disk,
//! validates them, and writes its artifacts into the output directory, so
//! a full run and a chain of stage invocations produce identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use triplewalk_core::evaluation::{
    self, classification_experiment, clustering_experiment, community_edge_dataset,
    detect_communities, LabeledDataset,
};
use triplewalk_core::graph::{HomogeneousGraph, KnowledgeGraph};
use triplewalk_core::linegraph::{self, TripleLineGraph};
use triplewalk_core::skipgram::{self, TrainConfig};
use triplewalk_core::walks::{generate_walks, WalkConfig, WalkCorpus};
use triplewalk_core::weighting::{
    cooccurrence_from_line_graph, current_flow_betweenness, predicate_relatedness,
    weight_homogeneous_line_graph, weight_kg_line_graph,
};

use crate::config::{EvalTask, GraphKind, Options, WeightingKind};

pub const LINE_NODES: &str = "line_nodes.tsv";
pub const LINE_GRAPH: &str = "line_graph.tsv";
pub const LINE_GRAPH_WEIGHTED: &str = "line_graph_weighted.tsv";
pub const RELATEDNESS: &str = "relatedness.tsv";
pub const CENTRALITY: &str = "centrality.tsv";
pub const CORPUS: &str = "corpus.txt";
pub const EMBEDDINGS: &str = "embeddings.txt";
pub const METRICS: &str = "metrics.tsv";

pub enum LoadedGraph {
    Kg(KnowledgeGraph),
    Homogeneous(HomogeneousGraph),
}

pub fn load_input(opts: &Options) -> Result<LoadedGraph> {
    let file = File::open(&opts.input)
        .with_context(|| format!("opening input {}", opts.input.display()))?;
    let reader = BufReader::new(file);
    Ok(match opts.kind {
        GraphKind::Kg => LoadedGraph::Kg(
            KnowledgeGraph::parse_tsv(reader)
                .with_context(|| format!("parsing {}", opts.input.display()))?,
        ),
        GraphKind::Homogeneous => LoadedGraph::Homogeneous(
            HomogeneousGraph::parse_edge_list(reader)
                .with_context(|| format!("parsing {}", opts.input.display()))?,
        ),
    })
}

fn artifact(opts: &Options, name: &str) -> PathBuf {
    opts.out.join(name)
}

fn open_artifact(opts: &Options, name: &str, prior_stage: &str) -> Result<BufReader<File>> {
    let path = artifact(opts, name);
    let file = File::open(&path).with_context(|| {
        format!(
            "missing artifact {}; run `{prior_stage}` first",
            path.display()
        )
    })?;
    Ok(BufReader::new(file))
}

fn create_artifact(opts: &Options, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(&opts.out)
        .with_context(|| format!("creating output directory {}", opts.out.display()))?;
    let path = artifact(opts, name);
    let file =
        File::create(&path).with_context(|| format!("writing artifact {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn load_line_graph(opts: &Options, name: &str, prior: &str, graph: &LoadedGraph) -> Result<TripleLineGraph> {
    let edges = open_artifact(opts, name, prior)?;
    let map = open_artifact(opts, LINE_NODES, "build-line-graph")?;
    Ok(match graph {
        LoadedGraph::Kg(g) => TripleLineGraph::read_kg_artifact(edges, map, g)?,
        LoadedGraph::Homogeneous(g) => TripleLineGraph::read_homogeneous_artifact(edges, map, g)?,
    })
}

pub fn stage_build_line_graph(opts: &Options) -> Result<()> {
    let graph = load_input(opts)?;
    let line = match &graph {
        LoadedGraph::Kg(g) => {
            if let Some(threshold) = opts.hub_threshold {
                let hubs = linegraph::hub_entities(g, threshold);
                if !hubs.is_empty() {
                    eprintln!(
                        "{} entities exceed incidence {threshold}; densest: {}",
                        hubs.len(),
                        hubs.iter()
                            .map(|&(v, k)| format!("{} ({k})", g.entity_name(v)))
                            .take(5)
                            .collect::<Vec<_>>()
                            .join(", ")
                    );
                }
            }
            linegraph::build_triple_line_graph(g)?
        }
        LoadedGraph::Homogeneous(g) => linegraph::build_line_graph(g)?,
    };
    let mut nodes_out = create_artifact(opts, LINE_NODES)?;
    match &graph {
        LoadedGraph::Kg(g) => line.write_node_map(&mut nodes_out, Some(g), None)?,
        LoadedGraph::Homogeneous(g) => line.write_node_map(&mut nodes_out, None, Some(g))?,
    }
    nodes_out.flush()?;
    let mut edges_out = create_artifact(opts, LINE_GRAPH)?;
    line.write_edges(&mut edges_out)?;
    edges_out.flush()?;
    println!(
        "line graph: {} nodes, {} edges",
        line.node_count(),
        line.edge_count()
    );
    Ok(())
}

pub fn stage_weigh(opts: &Options) -> Result<()> {
    let graph = load_input(opts)?;
    let line = load_line_graph(opts, LINE_GRAPH, "build-line-graph", &graph)?;
    let weighted = match (opts.weighting, &graph) {
        (WeightingKind::Uniform, _) => line,
        (WeightingKind::Relatedness, LoadedGraph::Kg(g)) => {
            let cooc = cooccurrence_from_line_graph(&line, g)?;
            let rel = predicate_relatedness(&cooc)?;
            let mut rel_out = create_artifact(opts, RELATEDNESS)?;
            rel.write_tsv(&mut rel_out, g)?;
            rel_out.flush()?;
            weight_kg_line_graph(line, &rel)?
        }
        (WeightingKind::Centrality, LoadedGraph::Homogeneous(g)) => {
            let cb = current_flow_betweenness(g)?;
            let mut cb_out = create_artifact(opts, CENTRALITY)?;
            cb.write_tsv(&mut cb_out, g)?;
            cb_out.flush()?;
            weight_homogeneous_line_graph(line, &cb, opts.blend)?
        }
        (WeightingKind::Relatedness, LoadedGraph::Homogeneous(_))
        | (WeightingKind::Centrality, LoadedGraph::Kg(_)) => {
            bail!("weighting scheme incompatible with input kind")
        }
    };
    let mut out = create_artifact(opts, LINE_GRAPH_WEIGHTED)?;
    weighted.write_edges(&mut out)?;
    out.flush()?;
    println!("weighted {} line edges ({:?})", weighted.edge_count(), opts.weighting);
    Ok(())
}

pub fn stage_walk(opts: &Options) -> Result<()> {
    let graph = load_input(opts)?;
    let line = load_line_graph(opts, LINE_GRAPH_WEIGHTED, "weigh", &graph)?;
    let cfg = WalkConfig {
        walks_per_node: opts.walks_per_node,
        max_length: opts.walk_length,
        seed: opts.seed,
    };
    let corpus = generate_walks(&line, &cfg)?;
    let mut out = create_artifact(opts, CORPUS)?;
    corpus.write(&mut out)?;
    out.flush()?;
    println!(
        "corpus: {} walks, {} tokens",
        corpus.len(),
        corpus.total_tokens()
    );
    Ok(())
}

/// Node count and display tokens from the node-map artifact.
fn node_map_tokens(opts: &Options, graph: &LoadedGraph) -> Result<Vec<String>> {
    let map = open_artifact(opts, LINE_NODES, "build-line-graph")?;
    match graph {
        LoadedGraph::Kg(g) => {
            let triples = linegraph::read_kg_node_map(map, g)?;
            Ok(triples
                .iter()
                .map(|t| {
                    format!(
                        "{}|{}|{}",
                        skipgram::escape_token(g.entity_name(t.subject)),
                        skipgram::escape_token(g.predicate_name(t.predicate)),
                        skipgram::escape_token(g.entity_name(t.object))
                    )
                })
                .collect())
        }
        LoadedGraph::Homogeneous(g) => {
            let edges = linegraph::read_homogeneous_node_map(map, g)?;
            Ok(edges
                .iter()
                .map(|&(i, j)| {
                    format!(
                        "{}|{}",
                        skipgram::escape_token(g.node_name(i)),
                        skipgram::escape_token(g.node_name(j))
                    )
                })
                .collect())
        }
    }
}

pub fn stage_embed(opts: &Options) -> Result<()> {
    let graph = load_input(opts)?;
    let tokens = node_map_tokens(opts, &graph)?;
    let corpus_reader = open_artifact(opts, CORPUS, "walk")?;
    let corpus = WalkCorpus::read(corpus_reader, tokens.len())?;
    let cfg = TrainConfig {
        dim: opts.dim,
        window: opts.window,
        negatives: opts.negatives,
        epochs: opts.epochs,
        step_size: 0.025,
        seed: opts.seed,
        workers: opts.threads,
    };
    let matrix = skipgram::train(&corpus, &cfg);
    let mut out = create_artifact(opts, EMBEDDINGS)?;
    skipgram::save_embeddings(&matrix, &tokens, &mut out)?;
    out.flush()?;
    println!("embeddings: {} nodes x {}", matrix.node_count(), matrix.dim());
    Ok(())
}

/// The labeled line-node dataset the evaluation tasks consume.
fn build_dataset(opts: &Options, graph: &LoadedGraph) -> Result<LabeledDataset> {
    match graph {
        LoadedGraph::Kg(g) => {
            let Some(labels_path) = &opts.labels else {
                bail!("knowledge-graph evaluation needs --labels (and optionally --rules)");
            };
            let labels_file = File::open(labels_path)
                .with_context(|| format!("opening labels {}", labels_path.display()))?;
            let seeds = evaluation::parse_label_file(BufReader::new(labels_file), g)?;
            let rules = match &opts.rules {
                Some(path) => {
                    let file = File::open(path)
                        .with_context(|| format!("opening rules {}", path.display()))?;
                    evaluation::parse_rules_file(BufReader::new(file), g)?
                }
                None => Vec::new(),
            };
            let propagated = evaluation::propagate_labels(g, &seeds.labels, &rules)?;
            Ok(evaluation::label_triples(g, &propagated, &seeds.names)?)
        }
        LoadedGraph::Homogeneous(g) => {
            let communities = detect_communities(g);
            Ok(community_edge_dataset(g, &communities)?)
        }
    }
}

fn load_embedding_rows(opts: &Options, expected_nodes: usize) -> Result<(usize, Vec<f64>)> {
    let reader = open_artifact(opts, EMBEDDINGS, "embed")?;
    let (_, matrix) = skipgram::load_embeddings(reader)?;
    if matrix.node_count() != expected_nodes {
        bail!(
            "embeddings cover {} nodes but the line graph has {expected_nodes}",
            matrix.node_count()
        );
    }
    Ok((matrix.dim(), matrix.to_f64_rows()))
}

fn dataset_name(opts: &Options) -> String {
    opts.input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string())
}

fn metrics_writer(opts: &Options) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(&opts.out)?;
    let path = artifact(opts, METRICS);
    let file = File::options()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(file))
}

const EVALUATION_RUNS: usize = 10;
const FRACTION_SWEEP: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

pub fn stage_eval_classify(opts: &Options) -> Result<()> {
    let graph = load_input(opts)?;
    let tokens = node_map_tokens(opts, &graph)?;
    let dataset = build_dataset(opts, &graph)?;
    if dataset.items.is_empty() {
        bail!("no labeled line nodes; check the label and rule files");
    }
    let (dim, rows) = load_embedding_rows(opts, tokens.len())?;
    let fractions: Vec<f64> = match opts.train_fraction {
        Some(f) => vec![f],
        None => FRACTION_SWEEP.to_vec(),
    };
    let name = dataset_name(opts);
    let mut out = metrics_writer(opts)?;
    for fraction in fractions {
        let outcome = classification_experiment(
            &rows,
            dim,
            &dataset,
            fraction,
            EVALUATION_RUNS,
            opts.seed,
        )?;
        if !outcome.dropped_classes.is_empty() {
            eprintln!(
                "warning: {} classes had no training rows at fraction {fraction} and were dropped",
                outcome.dropped_classes.len()
            );
        }
        writeln!(out, "classify\t{name}\t{fraction}\tmicro_f1\t{}", outcome.micro_f1)?;
        writeln!(out, "classify\t{name}\t{fraction}\tmacro_f1\t{}", outcome.macro_f1)?;
        println!(
            "classify fraction {fraction}: micro {:.4} macro {:.4}",
            outcome.micro_f1, outcome.macro_f1
        );
    }
    out.flush()?;
    Ok(())
}

pub fn stage_eval_cluster(opts: &Options) -> Result<()> {
    let graph = load_input(opts)?;
    let tokens = node_map_tokens(opts, &graph)?;
    let dataset = build_dataset(opts, &graph)?;
    if dataset.items.is_empty() {
        bail!("no labeled line nodes; check the label and rule files");
    }
    let (dim, rows) = load_embedding_rows(opts, tokens.len())?;
    let k = opts.k.unwrap_or(dataset.class_count());
    let score = clustering_experiment(&rows, dim, &dataset, k, EVALUATION_RUNS, opts.seed)?;
    let name = dataset_name(opts);
    let mut out = metrics_writer(opts)?;
    writeln!(out, "cluster\t{name}\t-\tnmi\t{score}")?;
    out.flush()?;
    println!("cluster k={k}: nmi {score:.4}");
    Ok(())
}

fn outputs_exist(opts: &Options, names: &[&str]) -> bool {
    names.iter().all(|n| artifact(opts, n).exists())
}

/// Runs every stage in order, writing all artifacts. With `resume`, stages
/// whose outputs already exist are skipped.
pub fn run_pipeline(opts: &Options, resume: bool) -> Result<()> {
    // Resolve the evaluation plan up front so configuration errors surface
    // before any work happens.
    let eval_task = match opts.eval_task {
        EvalTask::Auto => match opts.kind {
            GraphKind::Kg if opts.labels.is_some() => EvalTask::Classify,
            GraphKind::Kg => {
                eprintln!("no --labels given; skipping evaluation");
                EvalTask::None
            }
            GraphKind::Homogeneous => EvalTask::Both,
        },
        task => task,
    };
    if matches!(eval_task, EvalTask::Classify | EvalTask::Both)
        && opts.kind == GraphKind::Kg
        && opts.labels.is_none()
    {
        bail!("classification on a knowledge graph needs --labels");
    }

    let stages: [(&str, &[&str], fn(&Options) -> Result<()>); 4] = [
        ("build-line-graph", &[LINE_NODES, LINE_GRAPH], stage_build_line_graph),
        ("weigh", &[LINE_GRAPH_WEIGHTED], stage_weigh),
        ("walk", &[CORPUS], stage_walk),
        ("embed", &[EMBEDDINGS], stage_embed),
    ];
    for (name, outputs, stage) in stages {
        if resume && outputs_exist(opts, outputs) {
            println!("skipping {name} (artifacts exist)");
            continue;
        }
        stage(opts).with_context(|| format!("stage {name}"))?;
    }

    if !matches!(eval_task, EvalTask::None) {
        if resume && outputs_exist(opts, &[METRICS]) {
            println!("skipping evaluation (metrics exist)");
            return Ok(());
        }
        // A fresh run owns the metrics file.
        let _ = std::fs::remove_file(artifact(opts, METRICS));
        match eval_task {
            EvalTask::Classify => stage_eval_classify(opts).context("stage eval-classify")?,
            EvalTask::Cluster => stage_eval_cluster(opts).context("stage eval-cluster")?,
            EvalTask::Both => {
                stage_eval_classify(opts).context("stage eval-classify")?;
                stage_eval_cluster(opts).context("stage eval-cluster")?;
            }
            EvalTask::Auto | EvalTask::None => unreachable!("resolved above"),
        }
    }
    Ok(())
}
