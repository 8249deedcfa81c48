//! Line-graph construction.
//!
//! For a knowledge graph, the triple line graph has one node per triple and
//! joins two nodes whenever the triples share an endpoint entity, in either
//! role. For a homogeneous graph, the classic undirected line graph has one
//! node per edge and joins edges sharing a node. Both variants carry an edge
//! weight in [0,1], initialized to 1.0 and filled in by the weighting stage.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EntityId, HomogeneousGraph, KnowledgeGraph, NodeId, Triple};

/// What the line-graph nodes stand for in the source graph.
#[derive(Clone, Debug)]
pub enum LineGraphOrigin {
    /// Node `i` is triple `i` of the source knowledge graph.
    Knowledge(Vec<Triple>),
    /// Node `i` is edge `i` of the source homogeneous graph.
    Homogeneous(Vec<(NodeId, NodeId)>),
}

/// Weighted undirected graph over the triples (or edges) of a source graph.
#[derive(Clone, Debug)]
pub struct TripleLineGraph {
    node_count: usize,
    edges: Vec<(u32, u32)>,
    weights: Vec<f64>,
    origin: LineGraphOrigin,
}

impl TripleLineGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges with endpoints ordered `a < b`, sorted lexicographically.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn origin(&self) -> &LineGraphOrigin {
        &self.origin
    }

    /// Source triple represented by line node `n`, when built from a KG.
    pub fn source_triple(&self, n: u32) -> Option<Triple> {
        match &self.origin {
            LineGraphOrigin::Knowledge(ts) => ts.get(n as usize).copied(),
            LineGraphOrigin::Homogeneous(_) => None,
        }
    }

    /// Source edge represented by line node `n`, when built from a
    /// homogeneous graph.
    pub fn source_edge(&self, n: u32) -> Option<(NodeId, NodeId)> {
        match &self.origin {
            LineGraphOrigin::Knowledge(_) => None,
            LineGraphOrigin::Homogeneous(es) => es.get(n as usize).copied(),
        }
    }

    pub(crate) fn replace_weights(mut self, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), self.edges.len());
        self.weights = weights;
        self
    }

    /// Dumps the edges as `a b weight` lines.
    pub fn write_edges<W: Write>(&self, mut w: W) -> Result<()> {
        for (&(a, b), &weight) in self.edges.iter().zip(&self.weights) {
            writeln!(w, "{a} {b} {weight}")?;
        }
        Ok(())
    }

    /// Dumps the node map: `lineNodeId\ts\tp\to` for knowledge graphs,
    /// `lineNodeId\ti\tj` for homogeneous graphs.
    pub fn write_node_map<W: Write>(&self, mut w: W, kg: Option<&KnowledgeGraph>, hg: Option<&HomogeneousGraph>) -> Result<()> {
        match &self.origin {
            LineGraphOrigin::Knowledge(ts) => {
                let g = kg.ok_or_else(|| {
                    Error::Incompatible("knowledge-graph line graph needs its source graph to dump names".into())
                })?;
                for (i, t) in ts.iter().enumerate() {
                    writeln!(
                        w,
                        "{i}\t{}\t{}\t{}",
                        g.entity_name(t.subject),
                        g.predicate_name(t.predicate),
                        g.entity_name(t.object)
                    )?;
                }
            }
            LineGraphOrigin::Homogeneous(es) => {
                let g = hg.ok_or_else(|| {
                    Error::Incompatible("homogeneous line graph needs its source graph to dump names".into())
                })?;
                for (i, &(a, b)) in es.iter().enumerate() {
                    writeln!(w, "{i}\t{}\t{}", g.node_name(a), g.node_name(b))?;
                }
            }
        }
        Ok(())
    }

    /// Reads an edge dump back, reattaching the origin of `source`. The
    /// node map is validated against the source graph.
    pub fn read_kg_artifact<R: BufRead, M: BufRead>(edges: R, node_map: M, g: &KnowledgeGraph) -> Result<Self> {
        let triples = read_kg_node_map(node_map, g)?;
        let (edges, weights) = read_edge_lines(edges, triples.len())?;
        Ok(TripleLineGraph {
            node_count: triples.len(),
            edges,
            weights,
            origin: LineGraphOrigin::Knowledge(triples),
        })
    }

    pub fn read_homogeneous_artifact<R: BufRead, M: BufRead>(edges: R, node_map: M, g: &HomogeneousGraph) -> Result<Self> {
        let source_edges = read_homogeneous_node_map(node_map, g)?;
        let (edges, weights) = read_edge_lines(edges, source_edges.len())?;
        Ok(TripleLineGraph {
            node_count: source_edges.len(),
            edges,
            weights,
            origin: LineGraphOrigin::Homogeneous(source_edges),
        })
    }
}

pub fn read_kg_node_map<M: BufRead>(node_map: M, g: &KnowledgeGraph) -> Result<Vec<Triple>> {
    let mut triples = Vec::new();
    for (idx, line) in node_map.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(idx + 1, "node map row must be `id\\ts\\tp\\to`"));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(idx + 1, "bad line-node id"))?;
        if id != triples.len() {
            return Err(Error::parse(idx + 1, "line-node ids must be dense and ordered"));
        }
        let subject = g
            .entity_id(fields[1])
            .ok_or_else(|| Error::parse(idx + 1, format!("unknown entity '{}'", fields[1])))?;
        let predicate = g
            .predicate_id(fields[2])
            .ok_or_else(|| Error::parse(idx + 1, format!("unknown predicate '{}'", fields[2])))?;
        let object = g
            .entity_id(fields[3])
            .ok_or_else(|| Error::parse(idx + 1, format!("unknown entity '{}'", fields[3])))?;
        triples.push(Triple {
            subject,
            predicate,
            object,
        });
    }
    if triples.is_empty() {
        return Err(Error::EmptyInput("line-graph nodes"));
    }
    Ok(triples)
}

pub fn read_homogeneous_node_map<M: BufRead>(node_map: M, g: &HomogeneousGraph) -> Result<Vec<(NodeId, NodeId)>> {
    let mut edges = Vec::new();
    for (idx, line) in node_map.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(idx + 1, "node map row must be `id\\ti\\tj`"));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(idx + 1, "bad line-node id"))?;
        if id != edges.len() {
            return Err(Error::parse(idx + 1, "line-node ids must be dense and ordered"));
        }
        let a = g
            .node_id(fields[1])
            .ok_or_else(|| Error::parse(idx + 1, format!("unknown node '{}'", fields[1])))?;
        let b = g
            .node_id(fields[2])
            .ok_or_else(|| Error::parse(idx + 1, format!("unknown node '{}'", fields[2])))?;
        edges.push((a, b));
    }
    if edges.is_empty() {
        return Err(Error::EmptyInput("line-graph nodes"));
    }
    Ok(edges)
}

fn read_edge_lines<R: BufRead>(reader: R, node_count: usize) -> Result<(Vec<(u32, u32)>, Vec<f64>)> {
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (a, b, w) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(w), None) => (a, b, w),
            _ => return Err(Error::parse(idx + 1, "expected `a b weight`")),
        };
        let a: u32 = a.parse().map_err(|_| Error::parse(idx + 1, "bad node id"))?;
        let b: u32 = b.parse().map_err(|_| Error::parse(idx + 1, "bad node id"))?;
        let w: f64 = w.parse().map_err(|_| Error::parse(idx + 1, "bad weight"))?;
        if a as usize >= node_count || b as usize >= node_count {
            return Err(Error::parse(
                idx + 1,
                format!("edge ({a}, {b}) exceeds node count {node_count}"),
            ));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::parse(idx + 1, format!("weight {w} outside [0,1]")));
        }
        edges.push((a.min(b), a.max(b)));
        weights.push(w);
    }
    Ok((edges, weights))
}

/// Builds the triple line graph of a knowledge graph with uniform weights.
///
/// An edge joins two distinct triples iff they share at least one endpoint
/// entity; triples sharing both endpoints still contribute a single edge.
pub fn build_triple_line_graph(g: &KnowledgeGraph) -> Result<TripleLineGraph> {
    if g.triple_count() == 0 {
        return Err(Error::EmptyInput("triples"));
    }
    let entity_count = g.entity_count();
    let mut per_entity: Vec<Vec<(u32, u32)>> = Vec::with_capacity(entity_count);
    (0..entity_count)
        .into_par_iter()
        .map(|v| {
            let incident = g
                .incidence(EntityId(v as u32))
                .expect("entity ids are dense");
            let mut pairs = Vec::with_capacity(incident.len().saturating_sub(1));
            for (i, &a) in incident.iter().enumerate() {
                for &b in &incident[i + 1..] {
                    pairs.push((a.0, b.0));
                }
            }
            pairs
        })
        .collect_into_vec(&mut per_entity);

    let mut edges: Vec<(u32, u32)> = per_entity.into_iter().flatten().collect();
    edges.par_sort_unstable();
    edges.dedup();

    let weights = vec![1.0; edges.len()];
    Ok(TripleLineGraph {
        node_count: g.triple_count(),
        edges,
        weights,
        origin: LineGraphOrigin::Knowledge(g.triples().to_vec()),
    })
}

/// Builds the classic undirected line graph of a homogeneous graph with
/// uniform weights. Nodes are source edges; two line nodes are adjacent iff
/// their edges share an endpoint.
pub fn build_line_graph(g: &HomogeneousGraph) -> Result<TripleLineGraph> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyInput("edges"));
    }
    // Edge index per node; two distinct edges of a simple graph share at
    // most one node, so the per-node pair lists are disjoint.
    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); g.node_count()];
    for (idx, &(i, j)) in g.edges().iter().enumerate() {
        incident[i.index()].push(idx as u32);
        incident[j.index()].push(idx as u32);
    }
    let mut edges = Vec::new();
    for list in &incident {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    edges.sort_unstable();

    let weights = vec![1.0; edges.len()];
    Ok(TripleLineGraph {
        node_count: g.edge_count(),
        edges,
        weights,
        origin: LineGraphOrigin::Homogeneous(g.edges().to_vec()),
    })
}

/// Upper bound on the triple-line-graph edge count: sum over entities of
/// C(k, 2) where k is the entity's incidence size. Equality holds exactly
/// when no two triples share two endpoints.
pub fn line_edge_count_bound(g: &KnowledgeGraph) -> u64 {
    (0..g.entity_count())
        .map(|v| {
            let k = g
                .incidence(EntityId(v as u32))
                .expect("entity ids are dense")
                .len() as u64;
            k * (k - 1) / 2
        })
        .sum()
}

/// Adjacency lists (neighbor, edge index) for walking the line graph.
pub(crate) fn adjacency(l: &TripleLineGraph) -> Vec<Vec<(u32, u32)>> {
    let mut adj = vec![Vec::new(); l.node_count()];
    for (e, &(a, b)) in l.edges().iter().enumerate() {
        adj[a as usize].push((b, e as u32));
        adj[b as usize].push((a, e as u32));
    }
    adj
}

/// For each line edge of a homogeneous line graph, the source-node triple
/// `(i, j, k)` where `j` is the shared endpoint.
pub(crate) fn shared_endpoint_triples(l: &TripleLineGraph) -> Result<Vec<(NodeId, NodeId, NodeId)>> {
    let source_edges = match l.origin() {
        LineGraphOrigin::Homogeneous(es) => es,
        LineGraphOrigin::Knowledge(_) => {
            return Err(Error::Incompatible(
                "centrality weighting requires a line graph built from a homogeneous graph".into(),
            ))
        }
    };
    l.edges()
        .iter()
        .map(|&(p, q)| {
            let (a1, b1) = source_edges[p as usize];
            let (a2, b2) = source_edges[q as usize];
            let shared = if a1 == a2 || a1 == b2 {
                a1
            } else if b1 == a2 || b1 == b2 {
                b1
            } else {
                return Err(Error::Incompatible(format!(
                    "line edge ({p}, {q}) joins source edges without a shared endpoint"
                )));
            };
            let other1 = if a1 == shared { b1 } else { a1 };
            let other2 = if a2 == shared { b2 } else { a2 };
            Ok((other1, shared, other2))
        })
        .collect()
}

/// True iff the line graph is connected (or has a single node).
pub fn is_connected(l: &TripleLineGraph) -> bool {
    let n = l.node_count();
    if n <= 1 {
        return true;
    }
    let adj = adjacency(l);
    let mut seen = vec![false; n];
    let mut stack = vec![0u32];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &(u, _) in &adj[v as usize] {
            if !seen[u as usize] {
                seen[u as usize] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

/// Entities whose incidence size exceeds `threshold`; dense hubs dominate
/// the pairwise construction cost.
pub fn hub_entities(g: &KnowledgeGraph, threshold: usize) -> Vec<(EntityId, usize)> {
    let mut hubs = Vec::new();
    for v in 0..g.entity_count() {
        let k = g
            .incidence(EntityId(v as u32))
            .expect("entity ids are dense")
            .len();
        if k > threshold {
            hubs.push((EntityId(v as u32), k));
        }
    }
    hubs
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::io::Cursor;

    fn kg(input: &str) -> KnowledgeGraph {
        KnowledgeGraph::parse_tsv(Cursor::new(input)).unwrap()
    }

    fn homogeneous(input: &str) -> HomogeneousGraph {
        HomogeneousGraph::parse_edge_list(Cursor::new(input)).unwrap()
    }

    /// Brute-force oracle: all C(|T|, 2) triple pairs, endpoint intersection.
    fn oracle_edges(g: &KnowledgeGraph) -> HashSet<(u32, u32)> {
        let ts = g.triples();
        let mut out = HashSet::new();
        for i in 0..ts.len() {
            for j in (i + 1)..ts.len() {
                let a = [ts[i].subject, ts[i].object];
                let b = [ts[j].subject, ts[j].object];
                if a.iter().any(|x| b.contains(x)) {
                    out.insert((i as u32, j as u32));
                }
            }
        }
        out
    }

    #[test]
    fn single_triple_has_no_line_edges() {
        let l = build_triple_line_graph(&kg("a\tp\tb\n")).unwrap();
        assert_eq!(l.node_count(), 1);
        assert_eq!(l.edge_count(), 0);
    }

    #[test]
    fn parallel_triples_are_adjacent() {
        // Two predicates between the same endpoints form one line edge; in
        // the directed line graph they would stay isolated.
        let l = build_triple_line_graph(&kg(
            "LaurenOliver\tnationality\tAmericans\nLaurenOliver\tcitizenship\tAmericans\n",
        ))
        .unwrap();
        assert_eq!(l.node_count(), 2);
        assert_eq!(l.edges(), &[(0, 1)]);
    }

    #[test]
    fn triangle_of_triples() {
        let g = kg("a\tp\tb\nb\tq\tc\na\tr\tc\n");
        let l = build_triple_line_graph(&g).unwrap();
        assert_eq!(l.node_count(), 3);
        assert_eq!(l.edge_count(), 3);
        let got: HashSet<(u32, u32)> = l.edges().iter().copied().collect();
        assert_eq!(got, oracle_edges(&g));
    }

    #[test]
    fn rejects_empty_edge_set() {
        let g = HomogeneousGraph::parse_edge_list(Cursor::new("# no edges\n")).unwrap();
        assert!(matches!(build_line_graph(&g), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn uninitialized_weights_are_uniform() {
        let l = build_triple_line_graph(&kg("a\tp\tb\nb\tq\tc\n")).unwrap();
        assert!(l.weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn path_line_graph_counts() {
        // Path a-b-c: 2 line nodes, 1 line edge; 0.5*(1+4+1) - 2 = 1.
        let l = build_line_graph(&homogeneous("a b\nb c\n")).unwrap();
        assert_eq!(l.node_count(), 2);
        assert_eq!(l.edge_count(), 1);
    }

    #[test]
    fn single_edge_line_graph() {
        let l = build_line_graph(&homogeneous("a b\n")).unwrap();
        assert_eq!(l.node_count(), 1);
        assert_eq!(l.edge_count(), 0);
    }

    #[test]
    fn star_line_graph_is_triangle() {
        let g = homogeneous("hub a\nhub b\nhub c\n");
        let l = build_line_graph(&g).unwrap();
        assert_eq!(l.node_count(), 3);
        assert_eq!(l.edge_count(), 3);
        // Oracle: pair edges sharing the hub.
        let mut expected = HashSet::new();
        for i in 0..3u32 {
            for j in (i + 1)..3 {
                expected.insert((i, j));
            }
        }
        let got: HashSet<(u32, u32)> = l.edges().iter().copied().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn line_edge_count_identity() {
        let g = homogeneous("a b\nb c\nc d\nd a\na c\n");
        let l = build_line_graph(&g).unwrap();
        let degree_sq: usize = (0..g.node_count())
            .map(|v| g.degree(NodeId(v as u32)).pow(2))
            .sum();
        assert_eq!(l.node_count(), g.edge_count());
        assert_eq!(l.edge_count(), degree_sq / 2 - g.edge_count());
    }

    #[test]
    fn bound_zero_for_single_triple() {
        assert_eq!(line_edge_count_bound(&kg("a\tp\tb\n")), 0);
    }

    #[test]
    fn bound_tight_without_double_sharing() {
        let g = kg("a\tp\tb\na\tq\tc\n");
        let l = build_triple_line_graph(&g).unwrap();
        assert_eq!(line_edge_count_bound(&g), 1);
        assert_eq!(l.edge_count(), 1);
    }

    #[test]
    fn bound_loose_when_two_endpoints_shared() {
        let g = kg("a\tp\tb\na\tq\tb\n");
        let l = build_triple_line_graph(&g).unwrap();
        assert_eq!(line_edge_count_bound(&g), 2);
        assert_eq!(l.edge_count(), 1);
    }

    #[test]
    fn artifact_round_trip_kg() {
        let g = kg("a\tp\tb\nb\tq\tc\na\tr\tc\n");
        let l = build_triple_line_graph(&g).unwrap();
        let mut edges = Vec::new();
        let mut map = Vec::new();
        l.write_edges(&mut edges).unwrap();
        l.write_node_map(&mut map, Some(&g), None).unwrap();
        let l2 =
            TripleLineGraph::read_kg_artifact(Cursor::new(edges), Cursor::new(map), &g).unwrap();
        assert_eq!(l.edges(), l2.edges());
        assert_eq!(l.weights(), l2.weights());
        assert_eq!(l.node_count(), l2.node_count());
    }

    #[test]
    fn artifact_round_trip_homogeneous() {
        let g = homogeneous("a b\nb c\nc a\n");
        let l = build_line_graph(&g).unwrap();
        let mut edges = Vec::new();
        let mut map = Vec::new();
        l.write_edges(&mut edges).unwrap();
        l.write_node_map(&mut map, None, Some(&g)).unwrap();
        let l2 = TripleLineGraph::read_homogeneous_artifact(Cursor::new(edges), Cursor::new(map), &g)
            .unwrap();
        assert_eq!(l.edges(), l2.edges());
        assert_eq!(l.node_count(), l2.node_count());
    }

    #[test]
    fn entity_relabeling_preserves_line_structure() {
        // Same triples with entity names permuted; triple order unchanged,
        // so the line graph must be identical.
        let g1 = kg("a\tp\tb\nb\tq\tc\nc\tr\ta\n");
        let g2 = kg("c\tp\ta\na\tq\tb\nb\tr\tc\n");
        let l1 = build_triple_line_graph(&g1).unwrap();
        let l2 = build_triple_line_graph(&g2).unwrap();
        assert_eq!(l1.edges(), l2.edges());
    }
}
