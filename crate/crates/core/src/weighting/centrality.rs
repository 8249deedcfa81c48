//! Exact current-flow betweenness centrality.
//!
//! Models the graph as a resistor network with unit conductances. For every
//! unordered source/sink pair a unit current is injected, and a node's
//! throughput is half the absolute current through its incident edges; the
//! endpoints of a pair contribute nothing for that pair. The score is the
//! pair-averaged throughput, so every value lies in [0,1].
//!
//! Potentials come from a grounded Laplacian solve: the last node's row and
//! column are removed, the remainder is Cholesky-factorized, and columns of
//! the inverse are recovered by triangular solves. Potential differences
//! are invariant to the grounding choice, which is all the current
//! computation observes. The per-pair sum over `O(n^2)` pairs collapses to
//! a sorted prefix-sum scan per edge.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{HomogeneousGraph, NodeId};

/// Refuse the dense exact solver above this many nodes.
pub const DEFAULT_NODE_CAP: usize = 10_000;

/// Per-node current-flow betweenness, normalized to [0,1].
#[derive(Clone, Debug)]
pub struct CentralityVector {
    values: Vec<f64>,
}

impl CentralityVector {
    pub fn new(values: Vec<f64>) -> Self {
        CentralityVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, v: NodeId) -> f64 {
        self.values[v.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Dumps as `node\tcb` rows.
    pub fn write_tsv<W: Write>(&self, mut w: W, g: &HomogeneousGraph) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            writeln!(w, "{}\t{}", g.node_name(NodeId(i as u32)), v)?;
        }
        Ok(())
    }
}

pub fn current_flow_betweenness(g: &HomogeneousGraph) -> Result<CentralityVector> {
    current_flow_betweenness_with_cap(g, DEFAULT_NODE_CAP)
}

pub fn current_flow_betweenness_with_cap(
    g: &HomogeneousGraph,
    node_cap: usize,
) -> Result<CentralityVector> {
    let n = g.node_count();
    if n < 3 {
        return Err(Error::TooFewNodes { needed: 3, got: n });
    }
    if n > node_cap {
        return Err(Error::NodeCapExceeded {
            nodes: n,
            cap: node_cap,
        });
    }
    check_connected(g)?;

    let potentials = grounded_inverse(g)?;

    // Per-edge contributions; each edge (u, v) knows the potential
    // difference x_w it carries when unit current enters at w and leaves at
    // the ground, and the current for a pair (s, t) is x_s - x_t. Summing
    // |x_s - x_t| over all pairs, and over pairs excluding a fixed node,
    // both fall out of one sorted scan.
    let contributions: Vec<(f64, f64)> = g
        .edges()
        .par_iter()
        .map(|&(u, v)| {
            let (ui, vi) = (u.index(), v.index());
            let mut x: Vec<f64> = (0..n)
                .map(|w| potentials[ui * n + w] - potentials[vi * n + w])
                .collect();
            let (total, per_node) = pair_distance_sums(&mut x);
            let cu = 0.5 * (total - per_node[ui]);
            let cv = 0.5 * (total - per_node[vi]);
            (cu, cv)
        })
        .collect();

    let mut raw = vec![0.0f64; n];
    for (&(u, v), &(cu, cv)) in g.edges().iter().zip(&contributions) {
        raw[u.index()] += cu;
        raw[v.index()] += cv;
    }

    let pairs = (n - 1) as f64 * (n - 2) as f64 / 2.0;
    let values = raw.iter().map(|&v| (v / pairs).clamp(0.0, 1.0)).collect();
    Ok(CentralityVector { values })
}

fn check_connected(g: &HomogeneousGraph) -> Result<()> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut stack = vec![NodeId(0)];
    seen[0] = true;
    let mut reachable = 1usize;
    while let Some(v) = stack.pop() {
        for &u in g.neighbors(v)? {
            if !seen[u.index()] {
                seen[u.index()] = true;
                reachable += 1;
                stack.push(u);
            }
        }
    }
    if reachable < n {
        let missing = seen.iter().position(|&s| !s).expect("some node unseen");
        return Err(Error::Disconnected {
            node: g.node_name(NodeId(missing as u32)).to_string(),
            root: g.node_name(NodeId(0)).to_string(),
            reachable,
            total: n,
        });
    }
    Ok(())
}

/// Given values `x`, returns the sum of |x_s - x_t| over unordered pairs
/// and, per original index, the sum of |x_w - x_t| over all other t.
/// Destroys the order of `x`.
fn pair_distance_sums(x: &mut [f64]) -> (f64, Vec<f64>) {
    let n = x.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        x[a as usize]
            .partial_cmp(&x[b as usize])
            .expect("potentials are finite")
    });

    let mut prefix = 0.0;
    let total_sum: f64 = x.iter().sum();
    let mut per_node = vec![0.0; n];
    let mut total = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        let v = x[idx as usize];
        let below = rank as f64 * v - prefix;
        let above = (total_sum - prefix - v) - (n - 1 - rank) as f64 * v;
        per_node[idx as usize] = below + above;
        total += below;
        prefix += v;
    }
    (total, per_node)
}

/// Inverse of the Laplacian with the last node grounded, embedded as an
/// `n x n` row-major matrix whose ground row and column are zero.
fn grounded_inverse(g: &HomogeneousGraph) -> Result<Vec<f64>> {
    let n = g.node_count();
    let m = n - 1;

    let mut lap = vec![0.0f64; m * m];
    for v in 0..m {
        lap[v * m + v] = g.degree(NodeId(v as u32)) as f64;
    }
    for &(a, b) in g.edges() {
        let (a, b) = (a.index(), b.index());
        if a < m && b < m {
            lap[a * m + b] = -1.0;
            lap[b * m + a] = -1.0;
        }
    }

    cholesky_in_place(&mut lap, m)?;
    // Transposed copy of the factor so the backward solve walks rows.
    let mut upper = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..=i {
            upper[j * m + i] = lap[i * m + j];
        }
    }

    let mut inverse = vec![0.0f64; n * n];
    let lower = &lap;
    let upper = &upper;
    inverse
        .par_chunks_mut(n)
        .take(m)
        .enumerate()
        .for_each(|(u, row)| {
            let mut y = vec![0.0f64; m];
            // Forward solve L y = e_u; y is zero before index u.
            for i in u..m {
                let rhs = if i == u { 1.0 } else { 0.0 };
                let dot: f64 = lower[i * m + u..i * m + i]
                    .iter()
                    .zip(&y[u..i])
                    .map(|(l, yy)| l * yy)
                    .sum();
                y[i] = (rhs - dot) / lower[i * m + i];
            }
            // Backward solve L^T x = y.
            for i in (0..m).rev() {
                let dot: f64 = upper[i * m + i + 1..i * m + m]
                    .iter()
                    .zip(&y[i + 1..m])
                    .map(|(l, yy)| l * yy)
                    .sum();
                y[i] = (y[i] - dot) / upper[i * m + i];
            }
            row[..m].copy_from_slice(&y);
        });
    Ok(inverse)
}

/// In-place lower Cholesky factorization (Cholesky-Banachiewicz) of a
/// symmetric positive definite row-major matrix.
fn cholesky_in_place(a: &mut [f64], m: usize) -> Result<()> {
    for i in 0..m {
        for j in 0..=i {
            let dot: f64 = if i == j {
                a[i * m..i * m + i].iter().map(|v| v * v).sum()
            } else {
                let row_i = &a[i * m..i * m + j];
                let row_j = &a[j * m..j * m + j];
                row_i.iter().zip(row_j).map(|(x, y)| x * y).sum()
            };
            let value = a[i * m + j] - dot;
            if i == j {
                if value <= 0.0 {
                    return Err(Error::Incompatible(
                        "Laplacian factorization failed; graph may be malformed".into(),
                    ));
                }
                a[i * m + i] = value.sqrt();
            } else {
                a[i * m + j] = value / a[j * m + j];
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn homogeneous(input: &str) -> HomogeneousGraph {
        HomogeneousGraph::parse_edge_list(Cursor::new(input)).unwrap()
    }

    /// Dense Laplacian pseudo-inverse via (L + J/n)^-1 - J/n, inverted by
    /// Gauss-Jordan elimination: an algebraic route independent of the
    /// grounded Cholesky solver.
    fn pseudo_inverse(g: &HomogeneousGraph) -> Vec<f64> {
        let n = g.node_count();
        let mut a = vec![0.0f64; n * n];
        for v in 0..n {
            a[v * n + v] = g.degree(NodeId(v as u32)) as f64;
        }
        for &(i, j) in g.edges() {
            a[i.index() * n + j.index()] = -1.0;
            a[j.index() * n + i.index()] = -1.0;
        }
        for k in 0..n * n {
            a[k] += 1.0 / n as f64;
        }
        let mut inv = vec![0.0f64; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0;
        }
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r1, &r2| {
                    a[r1 * n + col]
                        .abs()
                        .partial_cmp(&a[r2 * n + col].abs())
                        .unwrap()
                })
                .unwrap();
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
                inv.swap(col * n + k, pivot_row * n + k);
            }
            let pivot = a[col * n + col];
            for k in 0..n {
                a[col * n + k] /= pivot;
                inv[col * n + k] /= pivot;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[row * n + col];
                if factor == 0.0 {
                    continue;
                }
                for k in 0..n {
                    a[row * n + k] -= factor * a[col * n + k];
                    inv[row * n + k] -= factor * inv[col * n + k];
                }
            }
        }
        for k in 0..n * n {
            inv[k] -= 1.0 / n as f64;
        }
        inv
    }

    /// Direct per-pair throughput accumulation from the pseudo-inverse.
    fn oracle_cfb(g: &HomogeneousGraph) -> Vec<f64> {
        let n = g.node_count();
        let c = pseudo_inverse(g);
        let mut acc = vec![0.0f64; n];
        for s in 0..n {
            for t in (s + 1)..n {
                // Potentials for unit current s -> t.
                let p: Vec<f64> = (0..n).map(|w| c[w * n + s] - c[w * n + t]).collect();
                for v in 0..n {
                    if v == s || v == t {
                        continue;
                    }
                    let mut through = 0.0;
                    for &u in g.neighbors(NodeId(v as u32)).unwrap() {
                        through += (p[v] - p[u.index()]).abs();
                    }
                    acc[v] += 0.5 * through;
                }
            }
        }
        let pairs = (n - 1) as f64 * (n - 2) as f64 / 2.0;
        acc.iter().map(|&v| v / pairs).collect()
    }

    #[test]
    fn path_centrality_is_middle_only() {
        // Oracle for the single s-t pair: all current flows through b.
        let cb = current_flow_betweenness(&homogeneous("a b\nb c\n")).unwrap();
        assert_eq!(cb.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn triangle_is_symmetric() {
        let cb = current_flow_betweenness(&homogeneous("a b\nb c\nc a\n")).unwrap();
        let first = cb.as_slice()[0];
        for &v in cb.as_slice() {
            assert!((v - first).abs() < 1e-12);
        }
    }

    #[test]
    fn four_cycle_matches_pseudo_inverse_oracle() {
        let g = homogeneous("a b\nb c\nc d\nd a\n");
        let cb = current_flow_betweenness(&g).unwrap();
        let oracle = oracle_cfb(&g);
        for (got, want) in cb.as_slice().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        // Hand value: each node carries 1/4 + 1/4 + 1/2 of a unit current
        // over its three relevant pairs, i.e. 1/3 after averaging.
        for &v in cb.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_graph_matches_oracle() {
        // Deterministic pseudo-random connected graph on 24 nodes.
        let mut edges = String::new();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for v in 1..24u64 {
            edges.push_str(&format!("n{} n{}\n", next() % v, v));
        }
        for _ in 0..30 {
            let a = next() % 24;
            let b = next() % 24;
            if a != b {
                edges.push_str(&format!("n{a} n{b}\n"));
            }
        }
        let g = homogeneous(&edges);
        let cb = current_flow_betweenness(&g).unwrap();
        let oracle = oracle_cfb(&g);
        for (got, want) in cb.as_slice().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn tree_equals_shortest_path_betweenness() {
        // On a tree all current follows the unique path.
        let g = homogeneous("a b\nb c\nb d\nd e\nd f\n");
        let cb = current_flow_betweenness(&g).unwrap();
        let n = g.node_count();
        // Shortest-path betweenness by BFS path counting (sigma = 1).
        let mut acc = vec![0.0f64; n];
        for s in 0..n {
            for t in (s + 1)..n {
                // BFS path from s to t.
                let mut prev = vec![usize::MAX; n];
                let mut queue = std::collections::VecDeque::from([s]);
                prev[s] = s;
                while let Some(v) = queue.pop_front() {
                    for &u in g.neighbors(NodeId(v as u32)).unwrap() {
                        if prev[u.index()] == usize::MAX {
                            prev[u.index()] = v;
                            queue.push_back(u.index());
                        }
                    }
                }
                let mut v = prev[t];
                while v != s {
                    acc[v] += 1.0;
                    v = prev[v];
                }
            }
        }
        let pairs = (n - 1) as f64 * (n - 2) as f64 / 2.0;
        for (got, want) in cb.as_slice().iter().zip(acc.iter().map(|&a| a / pairs)) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_small_graphs() {
        let g = homogeneous("a b\n");
        assert!(matches!(
            current_flow_betweenness(&g),
            Err(Error::TooFewNodes { .. })
        ));
    }

    #[test]
    fn rejects_disconnected_graph_naming_component() {
        let g = homogeneous("a b\nb c\nx y\ny z\n");
        let err = current_flow_betweenness(&g).unwrap_err();
        match err {
            Error::Disconnected {
                node,
                root,
                reachable,
                total,
            } => {
                assert_eq!(node, "x");
                assert_eq!(root, "a");
                assert_eq!(reachable, 3);
                assert_eq!(total, 6);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn enforces_node_cap() {
        let g = homogeneous("a b\nb c\nc d\n");
        assert!(matches!(
            current_flow_betweenness_with_cap(&g, 3),
            Err(Error::NodeCapExceeded { nodes: 4, cap: 3 })
        ));
    }
}
