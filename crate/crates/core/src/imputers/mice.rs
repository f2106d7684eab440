//! Chained-equation imputation with predictive mean matching.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Completion;
use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiceConfig {
    pub iterations: usize,
    pub donors: usize,
    pub ridge: f64,
}

impl Default for MiceConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            donors: 5,
            ridge: 1e-6,
        }
    }
}

impl MiceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("MICE needs at least one iteration"));
        }
        if self.donors == 0 {
            return Err(Error::invalid("MICE needs at least one donor"));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::invalid("MICE ridge penalty must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Ridge fit of `y` on `[1, x]` with an unpenalized intercept.
fn ridge_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut gram = x.tr_mul(x);
    for k in 1..gram.nrows() {
        gram[(k, k)] += lambda;
    }
    let rhs = x.tr_mul(y);
    gram.cholesky().map(|c| c.solve(&rhs))
}

/// Indices into `sorted` (ascending by prediction) of the `k` donors whose
/// predictions are nearest `target`; ties go to the lower prediction.
fn nearest_donors(sorted: &[(f64, usize)], target: f64, k: usize) -> std::ops::Range<usize> {
    let k = k.min(sorted.len());
    let mut hi = sorted.partition_point(|&(p, _)| p < target);
    let mut lo = hi;
    while hi - lo < k {
        let take_left = match (lo.checked_sub(1), hi < sorted.len()) {
            (Some(l), true) => target - sorted[l].0 <= sorted[hi].0 - target,
            (Some(_), false) => true,
            (None, _) => false,
        };
        if take_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    lo..hi
}

pub(crate) fn mice_joint(
    train: &Dataset,
    target: &Dataset,
    cfg: &MiceConfig,
    seed: u64,
) -> Result<Completion> {
    cfg.validate()?;
    let d = train.n_cols();
    if d < 2 {
        return Err(Error::invalid("MICE needs at least two columns"));
    }
    let n_train = train.n_rows();
    let stacked = Dataset::vstack(&[train, target])?;
    let n = stacked.n_rows();
    let missing: Array2<bool> = stacked.values().mapv(f64::is_nan);
    let mut z = stacked.values().clone();
    let mut rng = seed::rng(seed);

    // observed training rows per column
    let observed: Vec<Vec<usize>> = (0..d)
        .map(|j| (0..n_train).filter(|&i| !missing[[i, j]]).collect())
        .collect();
    for (j, rows) in observed.iter().enumerate() {
        if rows.is_empty() {
            return Err(Error::NoObservedCells(train.columns()[j].name.clone()));
        }
    }
    let to_impute: Vec<Vec<usize>> = (0..d)
        .map(|j| (0..n).filter(|&i| missing[[i, j]]).collect())
        .collect();

    for j in 0..d {
        for &i in &to_impute[j] {
            let donor = observed[j][rng.random_range(0..observed[j].len())];
            z[[i, j]] = z[[donor, j]];
        }
    }

    for _ in 0..cfg.iterations {
        for j in 0..d {
            if to_impute[j].is_empty() {
                continue;
            }
            // intercept plus every other column, for all stacked rows
            let x_all = DMatrix::from_fn(n, d, |i, c| match c {
                0 => 1.0,
                c if c <= j => z[[i, c - 1]],
                c => z[[i, c]],
            });
            let rows = &observed[j];
            let x_fit = x_all.select_rows(rows);
            let y_fit = DVector::from_iterator(rows.len(), rows.iter().map(|&i| z[[i, j]]));
            let beta = ridge_fit(&x_fit, &y_fit, cfg.ridge).ok_or_else(|| {
                Error::invalid(format!(
                    "singular regression design for column `{}`",
                    train.columns()[j].name
                ))
            })?;
            let pred = &x_all * &beta;

            let mut donors: Vec<(f64, usize)> = rows.iter().map(|&i| (pred[i], i)).collect();
            donors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let draws: Vec<(usize, f64)> = to_impute[j]
                .iter()
                .map(|&i| {
                    let pool = nearest_donors(&donors, pred[i], cfg.donors);
                    let pick = rng.random_range(pool);
                    (i, z[[donors[pick].1, j]])
                })
                .collect();
            for (i, v) in draws {
                z[[i, j]] = v;
            }
        }
    }

    let train_part = z.slice(ndarray::s![..n_train, ..]).to_owned();
    let target_part = z.slice(ndarray::s![n_train.., ..]).to_owned();
    Ok(Completion {
        train: train.with_values(train_part)?,
        target: target.with_values(target_part)?,
    })
}

/// Chained-equation imputation of `target` with models fit on `train`.
///
/// Missing cells start as random observed training values of their column.
/// Each sweep visits the columns in schema order, regresses the column on all
/// others over the training rows where it is observed, and replaces every
/// missing cell by the observed value of a donor drawn uniformly from the `k`
/// training rows with the nearest predictions.
pub fn impute_mice(train: &Dataset, target: &Dataset, cfg: &MiceConfig, seed: u64) -> Result<Dataset> {
    super::check_pair(train, target)?;
    Ok(mice_joint(train, target, cfg, seed)?.target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn donor_windows() {
        let sorted: Vec<(f64, usize)> = [0.0, 1.0, 2.0, 10.0].iter().map(|&p| (p, 0)).collect();
        assert_eq!(nearest_donors(&sorted, 1.2, 1), 1..2);
        assert_eq!(nearest_donors(&sorted, 1.5, 2), 1..3);
        assert_eq!(nearest_donors(&sorted, 1.5, 1), 1..2);
        assert_eq!(nearest_donors(&sorted, 100.0, 2), 2..4);
        assert_eq!(nearest_donors(&sorted, -5.0, 3), 0..3);
        assert_eq!(nearest_donors(&sorted, 3.0, 9), 0..4);
    }

    #[test]
    fn ridge_recovers_a_line() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let b = ridge_fit(&x, &y, 0.0).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
    }

    fn collinear() -> (Dataset, Dataset) {
        let train = Dataset::numeric(
            array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0], [5.0, 10.0], [6.0, f64::NAN]],
            None,
        )
        .unwrap();
        let target = Dataset::numeric(array![[2.5, f64::NAN], [f64::NAN, 7.0]], None).unwrap();
        (train, target)
    }

    #[test]
    fn imputations_come_from_observed_support() {
        let (train, target) = collinear();
        let out = impute_mice(&train, &target, &MiceConfig::default(), 3).unwrap();
        assert!([2.0, 4.0, 6.0, 8.0, 10.0].contains(&out.get(0, 1)));
        assert!((1..=6).map(f64::from).any(|v| v == out.get(1, 0)));
        assert_eq!(out.get(0, 0), 2.5);
        assert_eq!(out.get(1, 1), 7.0);
    }

    #[test]
    fn single_donor_is_the_nearest() {
        let (train, target) = collinear();
        let cfg = MiceConfig {
            donors: 1,
            ..Default::default()
        };
        for seed in 0..5 {
            let out = impute_mice(&train, &target, &cfg, seed).unwrap();
            // y = 2x exactly, so x = 2.5 predicts 5 and the nearest donors are 4 and 6
            assert!([4.0, 6.0].contains(&out.get(0, 1)));
            // x from y = 7 predicts 3.5: donors 3 and 4
            assert!([3.0, 4.0].contains(&out.get(1, 0)));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (train, target) = collinear();
        let cfg = MiceConfig::default();
        assert_eq!(
            impute_mice(&train, &target, &cfg, 9).unwrap(),
            impute_mice(&train, &target, &cfg, 9).unwrap()
        );
    }

    #[test]
    fn rejects_bad_input() {
        let one = Dataset::numeric(array![[1.0], [f64::NAN]], None).unwrap();
        assert!(impute_mice(&one, &one, &MiceConfig::default(), 0).is_err());
        let (train, target) = collinear();
        let bad = MiceConfig {
            donors: 0,
            ..Default::default()
        };
        assert!(impute_mice(&train, &target, &bad, 0).is_err());
    }

    /// x1 picks a mode; x2 sits near 0 or 10 accordingly. Masked x2 values
    /// should land in the correct mode.
    #[test]
    fn bimodal_column_lands_in_the_right_mode() {
        let mut rng = seed::rng(5);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let n = 500;
        let mut values = Array2::zeros((n, 2));
        let mut modes = Vec::with_capacity(n);
        for i in 0..n {
            let high = rng.random::<bool>();
            modes.push(high);
            values[[i, 0]] = if high { 1.0 } else { -1.0 } + noise.sample(&mut rng);
            values[[i, 1]] = if high { 10.0 } else { 0.0 } + noise.sample(&mut rng);
        }
        let mut masked = values.clone();
        let mut hidden = Vec::new();
        for i in (0..n).step_by(4) {
            masked[[i, 1]] = f64::NAN;
            hidden.push(i);
        }
        let train = Dataset::numeric(masked, None).unwrap();
        let empty = Dataset::numeric(Array2::zeros((0, 2)), None).unwrap();
        let out = mice_joint(&train, &empty, &MiceConfig::default(), 1).unwrap().train;
        let correct = hidden
            .iter()
            .filter(|&&i| (out.get(i, 1) > 5.0) == modes[i])
            .count();
        assert!(correct as f64 >= 0.9 * hidden.len() as f64, "{correct}/{}", hidden.len());
    }
}
