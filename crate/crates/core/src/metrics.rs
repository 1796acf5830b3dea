//! Ranking metrics for attack scores.

use crate::error::{Error, Result};

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::invalid(format!("score {s} is NaN")));
    }
    Ok(())
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid(
            "AUC needs both positive and negative labels",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the number of wins, so ties stay integral.
    let mut doubled: u128 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut q) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        doubled += 2 * p as u128 * neg_below as u128 + p as u128 * q as u128;
        neg_below += q;
        i = j;
    }
    Ok(doubled as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Fraction of positives among the `k` highest scores; equal scores are
/// ranked by ascending item index.
pub fn precision_at_k(scores: &[f64], labels: &[bool], k: usize) -> Result<f64> {
    check_lengths(scores, labels)?;
    if k == 0 {
        return Err(Error::invalid("precision@k needs k >= 1"));
    }
    if k > scores.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds {} scored items",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let hits = order[..k].iter().filter(|&&i| labels[i]).count();
    Ok(hits as f64 / k as f64)
}

/// Fraction of matching predictions.
pub fn accuracy(predicted: &[bool], labels: &[bool]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(a, b)| a == b).count();
    hits as f64 / predicted.len() as f64
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &[true, false, true, false]).unwrap(), 0.5);
        let scores = [0.9, 0.4, 0.5, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(auc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn auc_needs_both_classes() {
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(auc(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn precision_examples() {
        assert_eq!(
            precision_at_k(&[0.9, 0.8, 0.1], &[true, true, false], 2).unwrap(),
            1.0
        );
        assert_eq!(
            precision_at_k(&[0.9, 0.8], &[false, false], 2).unwrap(),
            0.0
        );
        assert_eq!(
            precision_at_k(&[0.9, 0.8, 0.7], &[true, false, true], 2).unwrap(),
            0.5
        );
        // Tie between items 1 and 2: item 1 ranks first.
        assert_eq!(
            precision_at_k(&[0.9, 0.5, 0.5], &[true, false, true], 2).unwrap(),
            0.5
        );
        assert!(precision_at_k(&[0.9], &[true], 0).is_err());
        assert!(precision_at_k(&[0.9], &[true], 2).is_err());
    }

    #[test]
    fn mean_std_of_constant() {
        assert_eq!(mean_std(&[2.0, 2.0]), (2.0, 0.0));
    }
}
