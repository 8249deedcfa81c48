//! Weighted truncated random walks over the line graph.
//!
//! Each line-graph node starts a fixed number of walks; every step moves to
//! a neighbor with probability proportional to the edge weight; a walk ends
//! early only at a node with no neighbors. Each (start node, walk index)
//! pair owns an RNG stream derived from the master seed, so generation is
//! reproducible regardless of how walks are scheduled across threads.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::linegraph::{self, TripleLineGraph};

#[derive(Copy, Clone, Debug)]
pub struct WalkConfig {
    /// Walks started per line-graph node.
    pub walks_per_node: usize,
    /// Maximum walk length, counted in nodes.
    pub max_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            max_length: 100,
            seed: 1,
        }
    }
}

/// Weight-proportional neighbor sampler with per-node alias tables.
pub struct TransitionSampler {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    tables: Vec<Option<AliasTable>>,
}

impl TransitionSampler {
    pub fn new(line: &TripleLineGraph) -> Result<Self> {
        for (i, &w) in line.weights().iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::BadWeight {
                    weight: w,
                    index: i,
                });
            }
        }
        let adjacency = linegraph::adjacency(line);
        let weights = line.weights();
        let mut offsets = Vec::with_capacity(line.node_count() + 1);
        let mut neighbors = Vec::new();
        let mut tables = Vec::with_capacity(line.node_count());
        offsets.push(0);
        for list in &adjacency {
            let w: Vec<f64> = list.iter().map(|&(_, e)| weights[e as usize]).collect();
            neighbors.extend(list.iter().map(|&(u, _)| u));
            offsets.push(neighbors.len());
            if w.is_empty() || w.iter().all(|&x| x == 0.0) {
                // Isolated node, or all-zero weights: nowhere to go.
                tables.push(None);
            } else {
                tables.push(Some(AliasTable::new(&w)?));
            }
        }
        Ok(TransitionSampler {
            offsets,
            neighbors,
            tables,
        })
    }

    pub fn node_count(&self) -> usize {
        self.tables.len()
    }

    /// Samples the next node from `current`, or `None` at a sink.
    #[inline]
    pub fn sample_next<R: Rng + ?Sized>(&self, current: u32, rng: &mut R) -> Option<u32> {
        let v = current as usize;
        let table = self.tables[v].as_ref()?;
        let pick = table.sample(rng);
        Some(self.neighbors[self.offsets[v] + pick])
    }
}

/// The walk corpus: `walks_per_node` walks starting from every node of the
/// line graph, in walk-index-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkCorpus {
    node_count: usize,
    walks: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn new(node_count: usize, walks: Vec<Vec<u32>>) -> Self {
        WalkCorpus { node_count, walks }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn walks(&self) -> &[Vec<u32>] {
        &self.walks
    }

    pub fn total_tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// One walk per line, space-separated node ids.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        use std::fmt::Write as _;
        let mut buf = String::new();
        for walk in &self.walks {
            buf.clear();
            for (i, node) in walk.iter().enumerate() {
                if i > 0 {
                    buf.push(' ');
                }
                let _ = write!(buf, "{node}");
            }
            buf.push('\n');
            w.write_all(buf.as_bytes())?;
        }
        Ok(())
    }

    /// Reads a corpus dump, validating every token against `node_count`.
    pub fn read<R: BufRead>(reader: R, node_count: usize) -> Result<Self> {
        let mut walks = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut walk = Vec::new();
            for token in line.split(' ') {
                let id: u32 = token
                    .parse()
                    .map_err(|_| Error::parse(idx + 1, format!("bad node id '{token}'")))?;
                if id as usize >= node_count {
                    return Err(Error::parse(
                        idx + 1,
                        format!("node id {id} exceeds node count {node_count}"),
                    ));
                }
                walk.push(id);
            }
            walks.push(walk);
        }
        if walks.is_empty() {
            return Err(Error::EmptyInput("walks"));
        }
        Ok(WalkCorpus { node_count, walks })
    }
}

/// RNG stream for one (seed, start node, walk index) triple.
fn stream_rng(seed: u64, node: u32, walk: u32) -> ChaCha8Rng {
    // SplitMix64 over the packed identifiers decorrelates nearby streams.
    let mut z = seed
        ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(u64::from(node) + 1))
        ^ (0xbf58_476d_1ce4_e5b9u64.wrapping_mul(u64::from(walk) + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Generates the full walk corpus for a weighted line graph.
pub fn generate_walks(line: &TripleLineGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    if line.node_count() == 0 {
        return Err(Error::EmptyInput("line-graph nodes"));
    }
    if cfg.walks_per_node == 0 || cfg.max_length == 0 {
        return Err(Error::Incompatible(
            "walks per node and walk length must be at least 1".into(),
        ));
    }
    let sampler = TransitionSampler::new(line)?;
    let n = line.node_count();
    let total = n * cfg.walks_per_node;

    let mut walks: Vec<Vec<u32>> = Vec::with_capacity(total);
    (0..total)
        .into_par_iter()
        .map(|slot| {
            // Walk-index-major: one pass over all start nodes per index.
            let walk_index = (slot / n) as u32;
            let start = (slot % n) as u32;
            let mut rng = stream_rng(cfg.seed, start, walk_index);
            let mut walk = Vec::with_capacity(cfg.max_length);
            walk.push(start);
            let mut current = start;
            while walk.len() < cfg.max_length {
                match sampler.sample_next(current, &mut rng) {
                    Some(next) => {
                        walk.push(next);
                        current = next;
                    }
                    None => break,
                }
            }
            walk
        })
        .collect_into_vec(&mut walks);

    Ok(WalkCorpus {
        node_count: n,
        walks,
    })
}
