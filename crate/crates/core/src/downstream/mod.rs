//! Logistic-regression classifier, evaluation metrics, pooling of
//! predictions over multiple imputations and iteration-count selection.

mod logreg;
mod metrics;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

pub use logreg::{
    loss_and_gradient, predict_proba, sigmoid, train_logreg, train_logreg_path, LogRegModel, LrPolicy,
};
pub use metrics::{auc, classification_metrics, EvalMetrics};

use crate::datamodel::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER_CANDIDATES: [usize; 5] = [50, 100, 150, 200, 250];
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Elementwise mean probability.
    #[default]
    Mean,
    /// Fraction of repeats whose probability reaches the threshold.
    Majority,
}

pub fn pool_predictions(predictions: &[Vec<f64>], pooling: Pooling) -> Result<Vec<f64>> {
    let first = predictions.first().ok_or_else(|| Error::invalid("nothing to pool"))?;
    if predictions.iter().any(|p| p.len() != first.len()) {
        return Err(Error::invalid("pooled prediction vectors differ in length"));
    }
    let m = predictions.len() as f64;
    Ok((0..first.len())
        .map(|i| match pooling {
            Pooling::Mean => {
                // offsets from the first vector keep identical inputs exact
                let base = first[i];
                let offset = predictions.iter().map(|p| p[i] - base).sum::<f64>() / m;
                let (lo, hi) = predictions
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[i]), hi.max(p[i])));
                (base + offset).clamp(lo, hi)
            }
            Pooling::Majority => {
                predictions.iter().filter(|p| p[i] >= DEFAULT_THRESHOLD).count() as f64 / m
            }
        })
        .collect())
}

/// Index of the best mean score; ties go to the earliest (smallest) candidate.
pub fn best_candidate(candidates: &[usize], mean_scores: &[f64]) -> Result<usize> {
    if candidates.is_empty() || candidates.len() != mean_scores.len() {
        return Err(Error::invalid("need one score per iteration candidate"));
    }
    let mut best = 0;
    for k in 1..candidates.len() {
        let better = mean_scores[k] > mean_scores[best]
            || (mean_scores[k] == mean_scores[best] && candidates[k] < candidates[best]);
        if better {
            best = k;
        }
    }
    Ok(candidates[best])
}

/// Pick the iteration cap with the best mean validation AUC over `folds`
/// (row indices into `dev`). `dev` must be complete and labeled.
pub fn select_max_iter(
    dev: &Dataset,
    folds: &[Vec<usize>],
    candidates: &[usize],
    policy: &LrPolicy,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("no iteration candidates"));
    }
    let labels = dev.labels().ok_or_else(|| Error::invalid("model selection needs labels"))?;
    if !dev.is_complete() {
        return Err(Error::invalid("model selection needs complete features"));
    }
    let mut checkpoints = candidates.to_vec();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut totals = vec![0.0; checkpoints.len()];
    for fold in folds {
        let mut in_fold = vec![false; dev.n_rows()];
        for &i in fold {
            in_fold[i] = true;
        }
        let train: Vec<usize> = (0..dev.n_rows()).filter(|&i| !in_fold[i]).collect();
        let x_train = dev.values().select(Axis(0), &train);
        let y_train: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let x_val = dev.values().select(Axis(0), fold);
        let y_val: Vec<u8> = fold.iter().map(|&i| labels[i]).collect();
        let path = train_logreg_path(x_train.view(), &y_train, &checkpoints, policy)?;
        for (total, model) in totals.iter_mut().zip(&path) {
            *total += auc(&predict_proba(model, x_val.view())?, &y_val)?;
        }
    }
    let means: Vec<f64> = totals.iter().map(|t| t / folds.len() as f64).collect();
    best_candidate(&checkpoints, &means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pooling() {
        assert_eq!(pool_predictions(&[vec![0.2, 0.7]], Pooling::Mean).unwrap(), vec![0.2, 0.7]);
        let p = pool_predictions(&[vec![0.2], vec![0.4]], Pooling::Mean).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15);
        let same = vec![0.1, 0.9, 0.5];
        assert_eq!(pool_predictions(&[same.clone(), same.clone(), same.clone()], Pooling::Mean).unwrap(), same);
        let votes = pool_predictions(&[vec![0.6, 0.1], vec![0.7, 0.2], vec![0.4, 0.3]], Pooling::Majority).unwrap();
        assert_eq!(votes, vec![2.0 / 3.0, 0.0]);
        assert!(pool_predictions(&[vec![0.1], vec![0.1, 0.2]], Pooling::Mean).is_err());
        assert!(pool_predictions(&[], Pooling::Mean).is_err());
    }

    proptest::proptest! {
        #[test]
        fn pooled_within_inputs(rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 5), 1..6)) {
            let pooled = pool_predictions(&rows, Pooling::Mean).unwrap();
            for (i, p) in pooled.iter().enumerate() {
                let lo = rows.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max);
                proptest::prop_assert!(lo <= *p && *p <= hi);
            }
        }
    }

    #[test]
    fn candidate_tie_rule() {
        assert_eq!(best_candidate(&[50], &[0.3]).unwrap(), 50);
        assert_eq!(best_candidate(&[50, 100, 150], &[0.9, 0.9, 0.9]).unwrap(), 50);
        assert_eq!(best_candidate(&[50, 100, 150], &[0.8, 0.9, 0.9]).unwrap(), 100);
    }

    #[test]
    fn separable_selection_picks_smallest() {
        let x = array![[-2.0], [-1.5], [-1.0], [-0.5], [0.5], [1.0], [1.5], [2.0], [-1.2], [1.2]];
        let dev = Dataset::numeric(x, Some(vec![0, 0, 0, 0, 1, 1, 1, 1, 0, 1])).unwrap();
        let folds = vec![vec![0, 4], vec![1, 5], vec![2, 6], vec![3, 7], vec![8, 9]];
        let k = select_max_iter(&dev, &folds, &DEFAULT_MAX_ITER_CANDIDATES, &LrPolicy::default()).unwrap();
        assert_eq!(k, 50);
    }
}
