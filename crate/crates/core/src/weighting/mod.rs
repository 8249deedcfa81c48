//! Edge weighting for line graphs.
//!
//! Knowledge-graph line graphs are weighted by predicate relatedness: the
//! cosine between popularity-weighted co-occurrence profiles of the two
//! predicates. Homogeneous line graphs are weighted by blending the
//! current-flow betweenness of the three source nodes touched by a line
//! edge. All produced weights live in [0,1]; exact zeros are floored to a
//! small epsilon so the walk graph keeps the connectivity of the line graph.

mod centrality;

pub use centrality::{
    current_flow_betweenness, current_flow_betweenness_with_cap, CentralityVector,
    DEFAULT_NODE_CAP,
};

use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, PredicateId};
use crate::linegraph::{self, LineGraphOrigin, TripleLineGraph};

/// Floor applied to zero weights so walks never lose connectivity.
pub const WEIGHT_FLOOR: f64 = 1e-4;

/// Symmetric predicate co-occurrence counts plus the per-predicate triple
/// frequencies needed for popularity weighting.
#[derive(Clone, Debug)]
pub struct CooccurrenceCounts {
    /// Number of predicates (matrix dimension).
    pub dim: usize,
    /// Row-major `dim x dim` counts; entry `(i, j)` is the number of
    /// unordered pairs of distinct endpoint-sharing triples with predicates
    /// `i` and `j`.
    pub counts: Vec<f64>,
    /// Triples using each predicate.
    pub triple_freq: Vec<usize>,
    /// Total number of triples in the source graph.
    pub total_triples: usize,
}

impl CooccurrenceCounts {
    pub fn get(&self, i: PredicateId, j: PredicateId) -> f64 {
        self.counts[i.index() * self.dim + j.index()]
    }
}

/// Counts, over all unordered pairs of distinct triples sharing at least
/// one endpoint, how often each predicate pair co-occurs. Pairs with two
/// distinct predicates contribute to both `(i, j)` and `(j, i)`; a
/// same-predicate pair contributes once to the diagonal.
pub fn predicate_cooccurrence(g: &KnowledgeGraph) -> CooccurrenceCounts {
    let line = linegraph::build_triple_line_graph(g).expect("graph has at least one triple");
    cooccurrence_from_line_graph(&line, g).expect("line graph built from this knowledge graph")
}

/// Same counts computed from an already-built triple line graph, whose
/// edges are exactly the deduplicated adjacent-triple pairs.
pub fn cooccurrence_from_line_graph(
    line: &TripleLineGraph,
    g: &KnowledgeGraph,
) -> Result<CooccurrenceCounts> {
    let triples = match line.origin() {
        LineGraphOrigin::Knowledge(ts) => ts,
        LineGraphOrigin::Homogeneous(_) => {
            return Err(Error::Incompatible(
                "predicate co-occurrence requires a line graph built from a knowledge graph".into(),
            ))
        }
    };
    let dim = g.predicate_count();
    let mut counts = vec![0.0; dim * dim];
    for &(a, b) in line.edges() {
        let pa = triples[a as usize].predicate.index();
        let pb = triples[b as usize].predicate.index();
        counts[pa * dim + pb] += 1.0;
        if pa != pb {
            counts[pb * dim + pa] += 1.0;
        }
    }
    Ok(CooccurrenceCounts {
        dim,
        counts,
        triple_freq: g.predicate_frequencies(),
        total_triples: g.triple_count(),
    })
}

/// Pairwise predicate relatedness in [0,1]; symmetric, 1 on the diagonal.
#[derive(Clone, Debug)]
pub struct RelatednessMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl RelatednessMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covers(&self, p: PredicateId) -> bool {
        p.index() < self.dim
    }

    pub fn get(&self, i: PredicateId, j: PredicateId) -> f64 {
        self.values[i.index() * self.dim + j.index()]
    }

    /// Dumps as `predA\tpredB\tvalue` rows (upper triangle incl. diagonal).
    pub fn write_tsv<W: Write>(&self, mut w: W, g: &KnowledgeGraph) -> Result<()> {
        for i in 0..self.dim {
            for j in i..self.dim {
                writeln!(
                    w,
                    "{}\t{}\t{}",
                    g.predicate_name(PredicateId(i as u32)),
                    g.predicate_name(PredicateId(j as u32)),
                    self.values[i * self.dim + j]
                )?;
            }
        }
        Ok(())
    }
}

/// Derives the relatedness matrix from co-occurrence counts. Each row is
/// scaled entry-wise by the inverse predicate popularity
/// `idf(j) = ln(1 + |T| / (1 + freq(p_j)))` and rows are compared by
/// cosine. All-zero rows are unrelated (0) to everything; the diagonal is
/// pinned to 1 so a walk can always continue across same-predicate edges.
pub fn predicate_relatedness(c: &CooccurrenceCounts) -> Result<RelatednessMatrix> {
    let dim = c.dim;
    if c.counts.len() != dim * dim {
        return Err(Error::DimensionMismatch(format!(
            "co-occurrence matrix has {} entries, expected {}",
            c.counts.len(),
            dim * dim
        )));
    }
    if c.triple_freq.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{} predicate frequencies for a {dim}-predicate matrix",
            c.triple_freq.len()
        )));
    }

    let idf: Vec<f64> = c
        .triple_freq
        .iter()
        .map(|&f| (1.0 + c.total_triples as f64 / (1.0 + f as f64)).ln())
        .collect();
    let weighted: Vec<f64> = (0..dim * dim)
        .map(|k| c.counts[k] * idf[k % dim])
        .collect();
    let norms: Vec<f64> = (0..dim)
        .map(|i| {
            weighted[i * dim..(i + 1) * dim]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let mut values = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let rel = if i == j {
                1.0
            } else if norms[i] > 0.0 && norms[j] > 0.0 {
                let dot: f64 = (0..dim)
                    .map(|k| weighted[i * dim + k] * weighted[j * dim + k])
                    .sum();
                (dot / (norms[i] * norms[j])).clamp(0.0, 1.0)
            } else {
                0.0
            };
            values[i * dim + j] = rel;
            values[j * dim + i] = rel;
        }
    }
    Ok(RelatednessMatrix { dim, values })
}

/// Weights every edge of a knowledge-graph line graph by the relatedness
/// of the two triples' predicates, flooring zeros to [`WEIGHT_FLOOR`].
pub fn weight_kg_line_graph(line: TripleLineGraph, rel: &RelatednessMatrix) -> Result<TripleLineGraph> {
    let triples = match line.origin() {
        LineGraphOrigin::Knowledge(ts) => ts.clone(),
        LineGraphOrigin::Homogeneous(_) => {
            return Err(Error::Incompatible(
                "relatedness weighting requires a line graph built from a knowledge graph".into(),
            ))
        }
    };
    let mut weights = Vec::with_capacity(line.edge_count());
    for &(a, b) in line.edges() {
        let pa = triples[a as usize].predicate;
        let pb = triples[b as usize].predicate;
        if !rel.covers(pa) || !rel.covers(pb) {
            let missing = if rel.covers(pa) { pb } else { pa };
            return Err(Error::MissingPredicate(format!("id {}", missing.0)));
        }
        weights.push(rel.get(pa, pb).clamp(WEIGHT_FLOOR, 1.0));
    }
    Ok(line.replace_weights(weights))
}

/// Blend coefficients for centrality weighting; must be non-negative and
/// sum to 1. `beta` always attaches to the shared endpoint.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BlendCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for BlendCoefficients {
    fn default() -> Self {
        BlendCoefficients {
            alpha: 0.25,
            beta: 0.5,
            gamma: 0.25,
        }
    }
}

impl BlendCoefficients {
    pub fn validate(&self) -> Result<()> {
        let sum = self.alpha + self.beta + self.gamma;
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidBlend {
                alpha: self.alpha,
                beta: self.beta,
                gamma: self.gamma,
            });
        }
        Ok(())
    }
}

/// Weights every edge of a homogeneous line graph as
/// `alpha*cb(i) + beta*cb(j) + gamma*cb(k)` where the line edge joins
/// source edges `(i, j)` and `(j, k)` sharing endpoint `j`. `alpha`
/// attaches to the endpoint coming from the lower-numbered line node.
pub fn weight_homogeneous_line_graph(
    line: TripleLineGraph,
    cb: &CentralityVector,
    coeff: BlendCoefficients,
) -> Result<TripleLineGraph> {
    coeff.validate()?;
    let triples = linegraph::shared_endpoint_triples(&line)?;
    for (i, j, k) in &triples {
        let max = i.index().max(j.index()).max(k.index());
        if max >= cb.len() {
            return Err(Error::DimensionMismatch(format!(
                "centrality vector has {} entries but the graph mentions node {max}",
                cb.len()
            )));
        }
    }
    let weights = triples
        .iter()
        .map(|&(i, j, k)| {
            let w = coeff.alpha * cb.get(i) + coeff.beta * cb.get(j) + coeff.gamma * cb.get(k);
            w.clamp(WEIGHT_FLOOR, 1.0)
        })
        .collect();
    Ok(line.replace_weights(weights))
}
