//! Lloyd's k-means with k-means++ seeding and restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 300;
const RESTARTS: usize = 10;

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub assignment: Vec<u32>,
    pub inertia: f64,
}

/// Clusters `n = data.len() / dim` points into `k` groups. Runs
/// [`RESTARTS`] seeded restarts and keeps the lowest-inertia result.
pub fn kmeans(data: &[f64], dim: usize, k: usize, seed: u64) -> Result<KmeansResult> {
    if data.is_empty() || dim == 0 {
        return Err(Error::EmptyInput("points"));
    }
    if data.len() % dim != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not divide into rows of {dim}",
            data.len()
        )));
    }
    let n = data.len() / dim;
    if k == 0 || k > n {
        return Err(Error::Incompatible(format!(
            "cannot split {n} points into {k} clusters"
        )));
    }

    let runs: Vec<KmeansResult> = (0..RESTARTS)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
            let centroids = plus_plus_init(data, dim, k, &mut rng);
            let (assignment, inertia_history) = lloyd(data, dim, k, centroids);
            KmeansResult {
                assignment,
                inertia: *inertia_history.last().expect("at least one iteration"),
            }
        })
        .collect();

    Ok(runs
        .into_iter()
        .min_by(|a, b| a.inertia.partial_cmp(&b.inertia).expect("finite inertia"))
        .expect("at least one restart"))
}

fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(data: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(row(first));

    let mut best_dist: Vec<f64> = (0..n).map(|i| distance_sq(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = best_dist.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in best_dist.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            // All remaining points coincide with a centroid.
            rng.random_range(0..n)
        };
        let c = centroids.len();
        centroids.extend_from_slice(row(chosen));
        let new_c = &centroids[c..c + dim];
        for i in 0..n {
            let d = distance_sq(row(i), new_c);
            if d < best_dist[i] {
                best_dist[i] = d;
            }
        }
    }
    centroids
}

/// Lloyd iterations until assignments stabilize or the cap is hit; returns
/// the final assignment together with the inertia after every iteration.
fn lloyd(data: &[f64], dim: usize, k: usize, mut centroids: Vec<f64>) -> (Vec<u32>, Vec<f64>) {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    let mut assignment = vec![u32::MAX; n];
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        // Assignment step.
        let mut changed = false;
        let mut inertia = 0.0;
        for i in 0..n {
            let mut best = 0u32;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = distance_sq(row(i), &centroids[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            inertia += best_d;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            break;
        }

        // Update step.
        let mut sums = vec![0.0f64; k * dim];
        let mut sizes = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i] as usize;
            sizes[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if sizes[c] == 0 {
                // Empty cluster: restart it at the point farthest from its
                // current centroid assignment.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = distance_sq(row(a), &centroids[assignment[a] as usize * dim..(assignment[a] as usize + 1) * dim]);
                        let db = distance_sq(row(b), &centroids[assignment[b] as usize * dim..(assignment[b] as usize + 1) * dim]);
                        da.partial_cmp(&db).expect("finite distances")
                    })
                    .expect("n > 0");
                centroids[c * dim..(c + 1) * dim].copy_from_slice(row(far));
            } else {
                for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *dst = s / sizes[c] as f64;
                }
            }
        }
    }
    (assignment, history)
}
