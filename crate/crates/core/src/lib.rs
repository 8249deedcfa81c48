//! Triple and edge embeddings from (knowledge) graphs.
//!
//! The pipeline turns a graph into a weighted line graph whose nodes are
//! the source triples (or edges), walks it with weight-biased truncated
//! random walks, and trains skip-gram embeddings with negative sampling on
//! the walk corpus. Evaluation utilities cover label propagation, one-vs-
//! rest classification with micro/macro F1, modularity communities, and
//! k-means clustering scored by NMI.

pub mod alias;
pub mod error;
pub mod evaluation;
pub mod graph;
mod hogwild;
pub mod linegraph;
pub mod skipgram;
pub mod walks;
pub mod weighting;

pub use error::{Error, Result};
pub use graph::{EntityId, HomogeneousGraph, KnowledgeGraph, NodeId, PredicateId, Triple, TripleId};
pub use linegraph::{build_line_graph, build_triple_line_graph, line_edge_count_bound, TripleLineGraph};
pub use skipgram::{load_embeddings, save_embeddings, train, EmbeddingMatrix, TrainConfig};
pub use walks::{generate_walks, WalkConfig, WalkCorpus};
pub use weighting::{
    current_flow_betweenness, predicate_cooccurrence, predicate_relatedness, weight_homogeneous_line_graph,
    weight_kg_line_graph, BlendCoefficients, CentralityVector, RelatednessMatrix,
};
