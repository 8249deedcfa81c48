//! Greedy agglomerative modularity maximization.
//!
//! Starts from singleton communities and repeatedly merges the connected
//! pair with the largest modularity gain while a strictly positive gain
//! exists. Deterministic: candidate pairs are scanned in ascending id
//! order and ties keep the first maximum.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::{HomogeneousGraph, NodeId};

use super::LabeledDataset;

/// Non-overlapping node communities; ids are dense and ordered by each
/// community's smallest member node.
pub fn detect_communities(g: &HomogeneousGraph) -> Vec<u32> {
    let n = g.node_count();
    let m = g.edge_count() as f64;
    if n == 0 {
        return Vec::new();
    }
    if m == 0.0 {
        return (0..n as u32).collect();
    }

    // community -> (neighbor community -> edge count)
    let mut between: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n];
    let mut degree_sum: Vec<f64> = (0..n).map(|v| g.degree(NodeId(v as u32)) as f64).collect();
    let mut alive: Vec<bool> = vec![true; n];
    let mut membership: Vec<u32> = (0..n as u32).collect();
    for &(i, j) in g.edges() {
        *between[i.index()].entry(j.0).or_insert(0.0) += 1.0;
        *between[j.index()].entry(i.0).or_insert(0.0) += 1.0;
    }

    loop {
        // Best positive-gain merge among connected community pairs.
        let mut best: Option<(f64, u32, u32)> = None;
        for a in 0..n as u32 {
            if !alive[a as usize] {
                continue;
            }
            for (&b, &e_ab) in &between[a as usize] {
                if b <= a {
                    continue;
                }
                let gain = e_ab / m
                    - degree_sum[a as usize] * degree_sum[b as usize] / (2.0 * m * m);
                if gain > 0.0 && best.is_none_or(|(g0, _, _)| gain > g0) {
                    best = Some((gain, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else {
            break;
        };

        // Merge b into a.
        let b_neighbors = std::mem::take(&mut between[b as usize]);
        for (c, e) in b_neighbors {
            if c == a {
                continue;
            }
            *between[a as usize].entry(c).or_insert(0.0) += e;
            let c_map = &mut between[c as usize];
            let moved = c_map.remove(&b).unwrap_or(0.0);
            *c_map.entry(a).or_insert(0.0) += moved;
        }
        between[a as usize].remove(&b);
        degree_sum[a as usize] += degree_sum[b as usize];
        alive[b as usize] = false;
        for mem in membership.iter_mut() {
            if *mem == b {
                *mem = a;
            }
        }
    }

    renumber(&membership)
}

fn renumber(membership: &[u32]) -> Vec<u32> {
    let mut mapping: BTreeMap<u32, u32> = BTreeMap::new();
    let mut out = Vec::with_capacity(membership.len());
    for &c in membership {
        let next = mapping.len() as u32;
        let id = *mapping.entry(c).or_insert(next);
        out.push(id);
    }
    // First-appearance order equals smallest-member order because nodes are
    // scanned in id order.
    out
}

/// Modularity of a node partition: sum over communities of
/// `e_c / m - (d_c / 2m)^2`.
pub fn modularity(g: &HomogeneousGraph, communities: &[u32]) -> f64 {
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let k = communities.iter().max().map_or(0, |&c| c as usize + 1);
    let mut intra = vec![0.0f64; k];
    let mut degree = vec![0.0f64; k];
    for &(i, j) in g.edges() {
        if communities[i.index()] == communities[j.index()] {
            intra[communities[i.index()] as usize] += 1.0;
        }
    }
    for v in 0..g.node_count() {
        degree[communities[v] as usize] += g.degree(NodeId(v as u32)) as f64;
    }
    (0..k)
        .map(|c| intra[c] / m - (degree[c] / (2.0 * m)).powi(2))
        .sum()
}

/// Labels every intra-community edge with its community; inter-community
/// edges are excluded. Line-node ids are source edge indices.
pub fn community_edge_dataset(g: &HomogeneousGraph, communities: &[u32]) -> Result<LabeledDataset> {
    let mut class_of_community: BTreeMap<u32, u32> = BTreeMap::new();
    let mut items = Vec::new();
    for (idx, &(i, j)) in g.edges().iter().enumerate() {
        let (ci, cj) = (communities[i.index()], communities[j.index()]);
        if ci != cj {
            continue;
        }
        let next = class_of_community.len() as u32;
        let class = *class_of_community.entry(ci).or_insert(next);
        items.push((idx as u32, class));
    }
    let mut classes = vec![String::new(); class_of_community.len()];
    for (community, class) in class_of_community {
        classes[class as usize] = community.to_string();
    }
    Ok(LabeledDataset { items, classes })
}
