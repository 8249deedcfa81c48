//! Deterministic graph generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triplewalk_core::graph::{HomogeneousGraph, KnowledgeGraph};

/// Random connected knowledge graph: a spanning tree over `entities` plus
/// `extra` random triples over `predicates` predicate names.
pub fn random_kg(entities: usize, predicates: usize, extra: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(String, String, String)> = Vec::new();
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
    KnowledgeGraph::from_string_triples(rows.iter().map(|(s, p, o)| (s.as_str(), p.as_str(), o.as_str())))
        .expect("non-empty")
}

/// Random connected homogeneous graph: ring plus `extra` random chords.
pub fn random_homogeneous(nodes: usize, extra: usize, seed: u64) -> HomogeneousGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(String, String)> = Vec::new();
    for i in 0..nodes {
        rows.push((format!("n{i}"), format!("n{}", (i + 1) % nodes)));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a != b {
            rows.push((format!("n{a}"), format!("n{b}")));
        }
    }
    HomogeneousGraph::from_string_edges(rows.iter().map(|(a, b)| (a.as_str(), b.as_str())))
        .expect("non-empty")
}
