use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_scores(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: (labels.len(), 1),
            actual: (scores.len(), 1),
        });
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Area under the ROC curve as the Mann–Whitney statistic with midranks:
/// `(concordant + ties/2) / (pos * neg)`.
///
/// Rank sums are accumulated doubled in integers, so the result is a single
/// rounding of an exact ratio.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_scores(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the sum of positive midranks (1-based)
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let doubled_midrank = (start + 1 + end + 1) as u128;
        let tied_pos = order[start..=end].iter().filter(|&&i| labels[i] == 1).count() as u128;
        doubled_rank_sum += doubled_midrank * tied_pos;
        start = end + 1;
    }
    let (p, q) = (pos as u128, neg as u128);
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2 * p * q) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub auc: f64,
    pub accuracy: f64,
    pub brier: f64,
    /// `None` when nothing is predicted positive.
    pub precision: Option<f64>,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Confusion-matrix metrics with `score >= threshold` predicted positive,
/// plus the Brier score and AUC.
pub fn classification_metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<EvalMetrics> {
    let (pos, neg) = check_scores(scores, labels)?;
    let (mut tp, mut fp, mut tn) = (0usize, 0usize, 0usize);
    let mut brier = 0.0;
    for (&s, &y) in scores.iter().zip(labels) {
        let predicted = s >= threshold;
        match (predicted, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => {}
        }
        brier += (s - f64::from(y)).powi(2);
    }
    let n = scores.len() as f64;
    Ok(EvalMetrics {
        auc: auc(scores, labels)?,
        accuracy: (tp + tn) as f64 / n,
        brier: brier / n,
        precision: (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64),
        sensitivity: tp as f64 / pos as f64,
        specificity: tn as f64 / neg as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn brute_force_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let (mut concordant, mut ties, mut pairs) = (0u64, 0u64, 0u64);
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1;
                    if si > sj {
                        concordant += 1;
                    } else if si == sj {
                        ties += 1;
                    }
                }
            }
        }
        (concordant as f64 + 0.5 * ties as f64) / pairs as f64
    }

    #[test]
    fn hand_values() {
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.9, 0.2, 0.8, 0.3], &[1, 0, 0, 1]).unwrap(), 0.75);
        assert_eq!(auc(&[0.4; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn matches_brute_force_on_random_vectors() {
        let mut rng = seed::rng(77);
        for _ in 0..300 {
            let n = rng.random_range(2..=100);
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            // coarse scores force many ties
            let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..12u8)) / 11.0).collect();
            assert_eq!(auc(&scores, &labels).unwrap(), brute_force_auc(&scores, &labels));
        }
    }

    #[test]
    fn confusion_metrics() {
        let m = classification_metrics(&[1.0, 1.0, 0.0, 0.0], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!((m.accuracy, m.brier, m.auc), (1.0, 0.0, 1.0));
        assert_eq!(m.precision, Some(1.0));
        let m = classification_metrics(&[0.5; 4], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(m.brier, 0.25);
        let m = classification_metrics(&[0.1, 0.2, 0.3], &[1, 0, 1], 0.5).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!((m.sensitivity, m.specificity), (0.0, 1.0));
        let m = classification_metrics(&[0.9, 0.6, 0.3, 0.7], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(m.precision, Some(1.0 / 3.0));
        assert_eq!((m.sensitivity, m.specificity, m.accuracy), (0.5, 0.0, 0.25));
    }

    proptest! {
        #[test]
        fn invariant_under_increasing_maps(scores in proptest::collection::vec(-3.0f64..3.0, 4..60),
                                           flips in proptest::collection::vec(0u8..2, 60)) {
            let mut labels: Vec<u8> = flips[..scores.len()].to_vec();
            labels[0] = 0;
            labels[1] = 1;
            let a = auc(&scores, &labels).unwrap();
            let mapped: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 1.0).collect();
            prop_assert_eq!(a, auc(&mapped, &labels).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
