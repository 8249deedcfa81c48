//! Classification and clustering metrics.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "{a} predictions for {b} ground-truth items"
        )));
    }
    if a == 0 {
        return Err(Error::EmptyInput("predictions"));
    }
    Ok(())
}

struct ClassCounts {
    tp: f64,
    fp: f64,
    fne: f64,
}

fn per_class_counts(predicted: &[u32], actual: &[u32]) -> HashMap<u32, ClassCounts> {
    let mut counts: HashMap<u32, ClassCounts> = HashMap::new();
    for (&p, &a) in predicted.iter().zip(actual) {
        for c in [p, a] {
            counts.entry(c).or_insert(ClassCounts {
                tp: 0.0,
                fp: 0.0,
                fne: 0.0,
            });
        }
        if p == a {
            counts.get_mut(&p).unwrap().tp += 1.0;
        } else {
            counts.get_mut(&p).unwrap().fp += 1.0;
            counts.get_mut(&a).unwrap().fne += 1.0;
        }
    }
    counts
}

/// F1 over globally pooled true/false positive and negative counts.
pub fn micro_f1(predicted: &[u32], actual: &[u32]) -> Result<f64> {
    check_lengths(predicted.len(), actual.len())?;
    let counts = per_class_counts(predicted, actual);
    let (mut tp, mut fp, mut fne) = (0.0, 0.0, 0.0);
    for c in counts.values() {
        tp += c.tp;
        fp += c.fp;
        fne += c.fne;
    }
    if tp == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp / (2.0 * tp + fp + fne))
}

/// Unweighted mean of per-class F1 scores; a class never predicted
/// correctly scores 0.
pub fn macro_f1(predicted: &[u32], actual: &[u32]) -> Result<f64> {
    check_lengths(predicted.len(), actual.len())?;
    let counts = per_class_counts(predicted, actual);
    let mut sum = 0.0;
    for c in counts.values() {
        let denom = 2.0 * c.tp + c.fp + c.fne;
        if denom > 0.0 {
            sum += 2.0 * c.tp / denom;
        }
    }
    Ok(sum / counts.len() as f64)
}

/// Normalized mutual information between two partitions: I(A;B) divided by
/// the geometric mean of the entropies, natural log. Returns 0 when one
/// partition is constant and the other is not, 1 when both are constant.
pub fn nmi(a: &[u32], b: &[u32]) -> Result<f64> {
    check_lengths(a.len(), b.len())?;
    let n = a.len() as f64;

    let mut joint: HashMap<(u32, u32), f64> = HashMap::new();
    let mut ca: HashMap<u32, f64> = HashMap::new();
    let mut cb: HashMap<u32, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0;
        *ca.entry(x).or_insert(0.0) += 1.0;
        *cb.entry(y).or_insert(0.0) += 1.0;
    }

    let entropy = |counts: &HashMap<u32, f64>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&ca);
    let hb = entropy(&cb);
    if ha == 0.0 && hb == 0.0 {
        // Both constant: identical as partitions.
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }

    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        let p = c / n;
        mi += p * (p / (ca[&x] / n * cb[&y] / n)).ln();
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_one() {
        let y = vec![0, 1, 2, 1, 0];
        assert_eq!(micro_f1(&y, &y).unwrap(), 1.0);
        assert_eq!(macro_f1(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn constant_predictor_on_balanced_classes() {
        // Confusion matrix by hand: class 0 has P=0.5, R=1 -> F1 = 2/3;
        // class 1 never predicted -> F1 = 0.
        let predicted = vec![0, 0, 0, 0];
        let actual = vec![0, 0, 1, 1];
        assert!((micro_f1(&predicted, &actual).unwrap() - 0.5).abs() < 1e-15);
        assert!((macro_f1(&predicted, &actual).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_single_class() {
        let y = vec![5, 5, 5];
        assert_eq!(micro_f1(&y, &y).unwrap(), 1.0);
        assert_eq!(macro_f1(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(micro_f1(&[0], &[0, 1]).is_err());
        assert!(macro_f1(&[0], &[0, 1]).is_err());
        assert!(nmi(&[0], &[0, 1]).is_err());
        assert!(micro_f1(&[], &[]).is_err());
    }

    #[test]
    fn metrics_invariant_under_relabeling() {
        let predicted = vec![0, 1, 1, 2, 0, 2, 1];
        let actual = vec![0, 1, 2, 2, 1, 2, 1];
        // Swap class names 0 <-> 2 consistently.
        let relabel = |v: &[u32]| -> Vec<u32> { v.iter().map(|&c| [2, 1, 0][c as usize]).collect() };
        assert_eq!(
            micro_f1(&predicted, &actual).unwrap(),
            micro_f1(&relabel(&predicted), &relabel(&actual)).unwrap()
        );
        assert_eq!(
            macro_f1(&predicted, &actual).unwrap(),
            macro_f1(&relabel(&predicted), &relabel(&actual)).unwrap()
        );
    }

    #[test]
    fn nmi_identical_partitions() {
        let a = vec![0, 0, 1, 1, 2];
        assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        // Permuted labels, same partition structure.
        let b = vec![7, 7, 3, 3, 9];
        assert!((nmi(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nmi_constant_cases() {
        assert_eq!(nmi(&[1, 1, 1], &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(nmi(&[4, 4, 4], &[4, 4, 4]).unwrap(), 1.0);
    }

    #[test]
    fn nmi_independent_partitions() {
        // Direct entropy computation: joint is uniform over 4 cells, so
        // MI = 0.
        let a = vec![0, 0, 1, 1];
        let b = vec![0, 1, 0, 1];
        assert!(nmi(&a, &b).unwrap().abs() < 1e-15);
    }

    #[test]
    fn nmi_is_symmetric() {
        let a = vec![0, 0, 1, 1, 2, 2, 0, 1];
        let b = vec![0, 1, 1, 1, 2, 0, 0, 2];
        let ab = nmi(&a, &b).unwrap();
        let ba = nmi(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }
}
