//! Shared generators and helpers for the acceptance suite.

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Serializes the compute-heavy criteria so wall-clock budgets are not
/// distorted by parallel test scheduling.
pub static HEAVY: Mutex<()> = Mutex::new(());

pub fn heavy_lock() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

pub fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

pub fn triplewalk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triplewalk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn data_file(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

/// Raw random KG triples with bounded entity/predicate pools.
pub fn random_kg_rows(
    max_triples: usize,
    entities: usize,
    predicates: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(String, String, String)> {
    let count = rng.random_range(1..=max_triples);
    (0..count)
        .map(|_| {
            (
                format!("e{}", rng.random_range(0..entities)),
                format!("p{}", rng.random_range(0..predicates)),
                format!("e{}", rng.random_range(0..entities)),
            )
        })
        .collect()
}

/// Random connected KG: spanning tree plus extra triples.
pub fn connected_kg_rows(
    entities: usize,
    predicates: usize,
    extra: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(String, String, String)> {
    let mut rows = Vec::new();
    for child in 1..entities {
        let parent = rng.random_range(0..child);
        rows.push((
            format!("e{parent}"),
            format!("p{}", rng.random_range(0..predicates)),
            format!("e{child}"),
        ));
    }
    for _ in 0..extra {
        rows.push((
            format!("e{}", rng.random_range(0..entities)),
            format!("p{}", rng.random_range(0..predicates)),
            format!("e{}", rng.random_range(0..entities)),
        ));
    }
    rows
}

/// Random connected simple graph edge pairs: ring plus chords.
pub fn connected_graph_pairs(nodes: usize, chords: usize, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let mut pairs: Vec<(u32, u32)> = (0..nodes as u32)
        .map(|i| (i, (i + 1) % nodes as u32))
        .collect();
    for _ in 0..chords {
        let a = rng.random_range(0..nodes as u32);
        let b = rng.random_range(0..nodes as u32);
        if a != b {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Random tree edge pairs.
pub fn random_tree_pairs(nodes: usize, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    (1..nodes as u32)
        .map(|child| (rng.random_range(0..child), child))
        .collect()
}

/// Planted-structure KG: `groups` dense clusters, each with its own
/// entity pool and predicate family, joined by a few bridge triples so the
/// graph stays connected. Returns the TSV text and a label file mapping
/// every group entity to its group label.
pub fn planted_kg(
    groups: usize,
    entities_per_group: usize,
    triples_per_group: usize,
    predicates_per_group: usize,
    bridges_per_seam: usize,
    seed: u64,
) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tsv = String::new();
    let mut labels = String::new();
    for g in 0..groups {
        let entity = |i: usize| format!("g{g}_e{i}");
        // Spanning tree keeps each group connected.
        for child in 1..entities_per_group {
            let parent = rng.random_range(0..child);
            let p = rng.random_range(0..predicates_per_group);
            let _ = writeln!(tsv, "{}\tg{g}_p{p}\t{}", entity(parent), entity(child));
        }
        for _ in entities_per_group - 1..triples_per_group {
            let s = rng.random_range(0..entities_per_group);
            let o = rng.random_range(0..entities_per_group);
            let p = rng.random_range(0..predicates_per_group);
            let _ = writeln!(tsv, "{}\tg{g}_p{p}\t{}", entity(s), entity(o));
        }
        for i in 0..entities_per_group {
            let _ = writeln!(labels, "{}\tL{g}", entity(i));
        }
    }
    for g in 0..groups.saturating_sub(1) {
        for _ in 0..bridges_per_seam {
            let a = rng.random_range(0..entities_per_group);
            let b = rng.random_range(0..entities_per_group);
            let _ = writeln!(tsv, "g{g}_e{a}\tbridge\tg{}_e{b}", g + 1);
        }
    }
    (tsv, labels)
}

/// Parses the mean NMI row out of a metrics.tsv file.
pub fn read_nmi(metrics_path: &Path) -> f64 {
    let text = std::fs::read_to_string(metrics_path).expect("metrics file");
    let row = text
        .lines()
        .find(|l| l.starts_with("cluster\t"))
        .expect("cluster row");
    row.split('\t').next_back().unwrap().parse().expect("numeric nmi")
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}
