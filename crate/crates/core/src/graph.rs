//! Interned graph representations.
//!
//! Two input graph kinds are supported: knowledge graphs (directed labeled
//! multigraphs given as subject/predicate/object triples) and homogeneous
//! undirected simple graphs given as edge lists. Both intern their string
//! tokens into dense 0-based ids, assigned in first-appearance order so a
//! given input file always produces the same ids.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({})"), self.0)
            }
        }
    };
}

id_type!(
    /// Dense id of an interned entity of a knowledge graph.
    EntityId
);
id_type!(
    /// Dense id of an interned predicate of a knowledge graph.
    PredicateId
);
id_type!(
    /// Dense id of a triple; doubles as the line-graph node id.
    TripleId
);
id_type!(
    /// Dense id of a node of a homogeneous graph.
    NodeId
);

/// A directed labeled edge of a knowledge graph.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct Triple {
    pub subject: EntityId,
    pub predicate: PredicateId,
    pub object: EntityId,
}

/// Interning table: token -> dense u32 id, first appearance wins.
#[derive(Clone, Debug, Default)]
pub struct StringTable {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl StringTable {
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// An interned knowledge graph: entities, predicates, deduplicated triples,
/// and a per-entity incidence index listing every triple the entity appears
/// in as subject or object.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    entities: StringTable,
    predicates: StringTable,
    triples: Vec<Triple>,
    incidence: Vec<Vec<TripleId>>,
}

impl KnowledgeGraph {
    /// Parses tab-separated `subject\tpredicate\tobject` lines. Lines that
    /// are empty or start with `#` are skipped; duplicate triples collapse
    /// to the first occurrence.
    pub fn parse_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (s, p, o) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(s), Some(p), Some(o), None) => (s, p, o),
                _ => {
                    return Err(Error::parse(
                        idx + 1,
                        "expected exactly 3 tab-separated fields (subject, predicate, object)",
                    ))
                }
            };
            rows.push((s.to_string(), p.to_string(), o.to_string()));
        }
        Self::from_string_triples(rows.iter().map(|(s, p, o)| (s.as_str(), p.as_str(), o.as_str())))
    }

    /// Builds a graph from already-split triples, interning in input order.
    pub fn from_string_triples<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut entities = StringTable::default();
        let mut predicates = StringTable::default();
        let mut triples = Vec::new();
        let mut seen = HashMap::new();
        for (s, p, o) in rows {
            let triple = Triple {
                subject: EntityId(entities.intern(s)),
                predicate: PredicateId(predicates.intern(p)),
                object: EntityId(entities.intern(o)),
            };
            seen.entry(triple).or_insert_with(|| {
                triples.push(triple);
                TripleId(triples.len() as u32 - 1)
            });
        }
        if triples.is_empty() {
            return Err(Error::EmptyInput("triples"));
        }

        let mut incidence = vec![Vec::new(); entities.len()];
        for (i, t) in triples.iter().enumerate() {
            let id = TripleId(i as u32);
            incidence[t.subject.index()].push(id);
            if t.object != t.subject {
                incidence[t.object.index()].push(id);
            }
        }
        // Triples were visited in id order, so each list is already sorted.
        Ok(KnowledgeGraph {
            entities,
            predicates,
            triples,
            incidence,
        })
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn predicate_count(&self) -> usize {
        self.predicates.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn triple(&self, id: TripleId) -> Triple {
        self.triples[id.index()]
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        self.entities.name(id.0)
    }

    pub fn predicate_name(&self, id: PredicateId) -> &str {
        self.predicates.name(id.0)
    }

    pub fn entity_id(&self, token: &str) -> Option<EntityId> {
        self.entities.get(token).map(EntityId)
    }

    pub fn predicate_id(&self, token: &str) -> Option<PredicateId> {
        self.predicates.get(token).map(PredicateId)
    }

    /// Sorted, duplicate-free list of the triples entity `v` appears in;
    /// a self-loop triple (subject = object) is listed once.
    pub fn incidence(&self, v: EntityId) -> Result<&[TripleId]> {
        self.incidence
            .get(v.index())
            .map(Vec::as_slice)
            .ok_or(Error::InvalidId {
                kind: "entity",
                id: v.index(),
                count: self.entities.len(),
            })
    }

    /// Per-predicate triple counts, indexed by `PredicateId`.
    pub fn predicate_frequencies(&self) -> Vec<usize> {
        let mut freq = vec![0usize; self.predicates.len()];
        for t in &self.triples {
            freq[t.predicate.index()] += 1;
        }
        freq
    }

    /// Writes the graph back out in the TSV input format, in triple-id
    /// order. Re-parsing the output reproduces identical interned ids.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.triples {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.entity_name(t.subject),
                self.predicate_name(t.predicate),
                self.entity_name(t.object)
            )?;
        }
        Ok(())
    }
}

/// An undirected simple graph with interned node tokens.
#[derive(Clone, Debug)]
pub struct HomogeneousGraph {
    nodes: StringTable,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
}

impl HomogeneousGraph {
    /// Parses whitespace-separated `i j` lines; `#` comments and blank
    /// lines are skipped. `(i, j)` and `(j, i)` collapse to one edge;
    /// self-loops are rejected.
    pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let (a, b) = match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::parse(
                        idx + 1,
                        "expected exactly 2 whitespace-separated node tokens",
                    ))
                }
            };
            if a == b {
                return Err(Error::parse(idx + 1, format!("self-loop on node '{a}'")));
            }
            pairs.push((a.to_string(), b.to_string()));
        }
        Self::from_string_edges(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())))
    }

    /// Builds a graph from node-token pairs, interning in input order.
    pub fn from_string_edges<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut nodes = StringTable::default();
        let mut edges = Vec::new();
        let mut seen = HashMap::new();
        for (a, b) in pairs {
            let i = NodeId(nodes.intern(a));
            let j = NodeId(nodes.intern(b));
            if i == j {
                return Err(Error::Incompatible(format!("self-loop on node '{a}'")));
            }
            let key = (i.min(j), i.max(j));
            seen.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            });
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(i, j) in &edges {
            adjacency[i.index()].push(j);
            adjacency[j.index()].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(HomogeneousGraph {
            nodes,
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in insertion order with endpoints ordered `i < j`.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        self.nodes.name(id.0)
    }

    pub fn node_id(&self, token: &str) -> Option<NodeId> {
        self.nodes.get(token).map(NodeId)
    }

    pub fn neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        self.adjacency
            .get(v.index())
            .map(Vec::as_slice)
            .ok_or(Error::InvalidId {
                kind: "node",
                id: v.index(),
                count: self.nodes.len(),
            })
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v.index()].len()
    }

    /// Writes the graph back out in the edge-list input format.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for &(i, j) in &self.edges {
            writeln!(w, "{} {}", self.node_name(i), self.node_name(j))?;
        }
        Ok(())
    }
}
