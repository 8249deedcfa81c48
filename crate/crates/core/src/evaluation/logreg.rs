//! One-vs-rest logistic regression trained by full-batch gradient descent
//! with backtracking line search. Deterministic and dependency-free.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const L2_LAMBDA: f64 = 1e-4;
const MAX_ITERATIONS: usize = 1000;
const GRADIENT_TOLERANCE: f64 = 1e-7;
const ARMIJO_C: f64 = 1e-4;

/// Train/test index split preserving class proportions.
#[derive(Clone, Debug)]
pub struct StratifiedSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles each class separately and sends `round(fraction * count)` of
/// it to the training side, so proportions are preserved within one item
/// per class.
pub fn stratified_split(labels: &[u32], train_fraction: f64, seed: u64) -> Result<StratifiedSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Incompatible(format!(
            "train fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = StratifiedSplit {
        train: Vec::new(),
        test: Vec::new(),
    };
    for class in classes {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        let take = (train_fraction * idx.len() as f64).round() as usize;
        split.train.extend_from_slice(&idx[..take]);
        split.test.extend_from_slice(&idx[take..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// One-vs-rest model: a weight vector plus bias per class, predictions by
/// highest score.
#[derive(Clone, Debug)]
pub struct OvrLogisticRegression {
    dim: usize,
    classes: Vec<u32>,
    /// Per class: `dim` weights followed by the bias.
    parameters: Vec<f64>,
    /// Classes present in the data but absent from the training split.
    pub dropped_classes: Vec<u32>,
}

impl OvrLogisticRegression {
    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn predict(&self, x: &[f64]) -> u32 {
        debug_assert_eq!(x.len(), self.dim);
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (c, chunk) in self.parameters.chunks(self.dim + 1).enumerate() {
            let score = chunk[self.dim]
                + chunk[..self.dim]
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>();
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        self.classes[best]
    }
}

fn stable_softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// L2-regularized binary cross-entropy for parameters `[w, b]` over the
/// rows `idx` of `features`.
pub(crate) fn logistic_loss(
    features: &[f64],
    dim: usize,
    idx: &[usize],
    targets: &[f64],
    params: &[f64],
) -> f64 {
    let n = idx.len() as f64;
    let (w, b) = params.split_at(dim);
    let b = b[0];
    let mut loss = 0.0;
    for (&i, &y) in idx.iter().zip(targets) {
        let x = &features[i * dim..(i + 1) * dim];
        let z = b + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        loss += stable_softplus(z) - y * z;
    }
    loss / n + 0.5 * L2_LAMBDA * w.iter().map(|v| v * v).sum::<f64>()
}

/// Loss together with its gradient.
pub(crate) fn logistic_loss_and_gradient(
    features: &[f64],
    dim: usize,
    idx: &[usize],
    targets: &[f64],
    params: &[f64],
) -> (f64, Vec<f64>) {
    let n = idx.len() as f64;
    let (w, b) = params.split_at(dim);
    let b = b[0];
    let mut loss = 0.0;
    let mut grad = vec![0.0f64; dim + 1];
    for (&i, &y) in idx.iter().zip(targets) {
        let x = &features[i * dim..(i + 1) * dim];
        let z = b + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        loss += stable_softplus(z) - y * z;
        let sigma = 1.0 / (1.0 + (-z).exp());
        let coeff = sigma - y;
        for (g, xi) in grad[..dim].iter_mut().zip(x) {
            *g += coeff * xi;
        }
        grad[dim] += coeff;
    }
    loss /= n;
    for g in grad.iter_mut() {
        *g /= n;
    }
    // Regularize weights, not the bias.
    for (g, wi) in grad[..dim].iter_mut().zip(w) {
        *g += L2_LAMBDA * wi;
    }
    loss += 0.5 * L2_LAMBDA * w.iter().map(|v| v * v).sum::<f64>();
    (loss, grad)
}

fn fit_binary(features: &[f64], dim: usize, idx: &[usize], targets: &[f64]) -> Vec<f64> {
    let mut params = vec![0.0f64; dim + 1];
    let mut step = 1.0f64;
    let (mut loss, mut grad) = logistic_loss_and_gradient(features, dim, idx, targets, &params);
    for _ in 0..MAX_ITERATIONS {
        let grad_norm_sq: f64 = grad.iter().map(|g| g * g).sum();
        if grad_norm_sq.sqrt() < GRADIENT_TOLERANCE {
            break;
        }
        // Backtracking line search on the descent direction -grad; only
        // the accepted candidate pays for a gradient.
        step *= 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - step * g)
                .collect();
            let cand_loss = logistic_loss(features, dim, idx, targets, &candidate);
            if cand_loss <= loss - ARMIJO_C * step * grad_norm_sq {
                let previous_loss = loss;
                let (new_loss, new_grad) =
                    logistic_loss_and_gradient(features, dim, idx, targets, &candidate);
                params = candidate;
                loss = new_loss;
                grad = new_grad;
                accepted = true;
                // Loss plateau: converged to working precision.
                if (previous_loss - loss).abs() <= 1e-12 * previous_loss.abs().max(1.0) {
                    return params;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    params
}

/// Fits one binary classifier per class over the training rows of a
/// stratified split. Classes with no training rows are dropped.
pub fn train_logistic_ovr(
    features: &[f64],
    dim: usize,
    labels: &[u32],
    split: &StratifiedSplit,
) -> Result<OvrLogisticRegression> {
    if features.len() != labels.len() * dim {
        return Err(Error::DimensionMismatch(format!(
            "{} feature values for {} labeled rows of dimension {dim}",
            features.len(),
            labels.len()
        )));
    }
    let mut all_classes: Vec<u32> = labels.to_vec();
    all_classes.sort_unstable();
    all_classes.dedup();
    if all_classes.len() < 2 {
        return Err(Error::Incompatible(
            "classification needs at least 2 classes".into(),
        ));
    }

    let mut classes = Vec::new();
    let mut dropped_classes = Vec::new();
    for &c in &all_classes {
        if split.train.iter().any(|&i| labels[i] == c) {
            classes.push(c);
        } else {
            dropped_classes.push(c);
        }
    }

    let per_class: Vec<Vec<f64>> = classes
        .par_iter()
        .map(|&class| {
            let targets: Vec<f64> = split
                .train
                .iter()
                .map(|&i| if labels[i] == class { 1.0 } else { 0.0 })
                .collect();
            fit_binary(features, dim, &split.train, &targets)
        })
        .collect();

    Ok(OvrLogisticRegression {
        dim,
        classes,
        parameters: per_class.into_iter().flatten().collect(),
        dropped_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n_per_class: usize, separation: f64, seed: u64) -> (Vec<f64>, Vec<u32>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2u32 {
            let offset = class as f64 * separation;
            for _ in 0..n_per_class {
                features.push(offset + rng.random::<f64>());
                features.push(offset + rng.random::<f64>());
                labels.push(class);
            }
        }
        (features, labels)
    }

    #[test]
    fn split_preserves_proportions() {
        let labels: Vec<u32> = (0..100).map(|i| if i < 40 { 0 } else { 1 }).collect();
        let split = stratified_split(&labels, 0.5, 3).unwrap();
        let train_zero = split.train.iter().filter(|&&i| labels[i] == 0).count();
        let train_one = split.train.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!(train_zero, 20);
        assert_eq!(train_one, 30);
        assert_eq!(split.train.len() + split.test.len(), 100);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        assert!(stratified_split(&[0, 1], 0.0, 0).is_err());
        assert!(stratified_split(&[0, 1], 1.0, 0).is_err());
    }

    #[test]
    fn separable_blobs_classify_perfectly() {
        let (features, labels) = blobs(50, 10.0, 11);
        let split = stratified_split(&labels, 0.5, 1).unwrap();
        let model = train_logistic_ovr(&features, 2, &labels, &split).unwrap();
        for &i in &split.test {
            assert_eq!(model.predict(&features[i * 2..i * 2 + 2]), labels[i]);
        }
    }

    #[test]
    fn random_labels_score_near_chance() {
        // Features carry no signal; accuracy over the test half of 400
        // items should hover around 0.5.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 400;
        let features: Vec<f64> = (0..n * 4).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
        let split = stratified_split(&labels, 0.5, 9).unwrap();
        let model = train_logistic_ovr(&features, 4, &labels, &split).unwrap();
        let correct = split
            .test
            .iter()
            .filter(|&&i| model.predict(&features[i * 4..(i + 1) * 4]) == labels[i])
            .count();
        let accuracy = correct as f64 / split.test.len() as f64;
        assert!((accuracy - 0.5).abs() < 0.1, "accuracy {accuracy}");
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 12;
        let dim = 5;
        let features: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let idx: Vec<usize> = (0..n).collect();
        let targets: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let params: Vec<f64> = (0..dim + 1).map(|_| rng.random::<f64>() - 0.5).collect();

        let (_, grad) = logistic_loss_and_gradient(&features, dim, &idx, &targets, &params);
        let h = 1e-6;
        for p in 0..dim + 1 {
            let mut plus = params.clone();
            plus[p] += h;
            let mut minus = params.clone();
            minus[p] -= h;
            let (lp, _) = logistic_loss_and_gradient(&features, dim, &idx, &targets, &plus);
            let (lm, _) = logistic_loss_and_gradient(&features, dim, &idx, &targets, &minus);
            let numeric = (lp - lm) / (2.0 * h);
            assert!(
                (grad[p] - numeric).abs() < 1e-6,
                "param {p}: {} vs {numeric}",
                grad[p]
            );
        }
    }

    #[test]
    fn rejects_single_class() {
        let features = vec![0.0; 8];
        let labels = vec![3u32; 4];
        let split = StratifiedSplit {
            train: vec![0, 1],
            test: vec![2, 3],
        };
        assert!(train_logistic_ovr(&features, 2, &labels, &split).is_err());
    }

    #[test]
    fn drops_class_missing_from_training() {
        let (mut features, mut labels) = blobs(10, 10.0, 2);
        // One extra item of class 2 that lands in the test side only.
        features.extend_from_slice(&[100.0, 100.0]);
        labels.push(2);
        let split = StratifiedSplit {
            train: (0..15).collect(),
            test: (15..21).collect(),
        };
        let model = train_logistic_ovr(&features, 2, &labels, &split).unwrap();
        assert_eq!(model.dropped_classes, vec![2]);
        assert!(!model.classes().contains(&2));
    }
}
