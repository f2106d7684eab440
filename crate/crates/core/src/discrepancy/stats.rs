use serde::{Deserialize, Serialize};

use super::kernels::{kl_sorted, ks_sorted, wasserstein2_sorted, KlConfig};
use crate::datamodel::{Dataset, Mask};
use crate::error::{Error, Result};

/// Sample-wise errors over the masked cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when the true masked values have zero variance.
    pub r2: Option<f64>,
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDiscrepancy {
    pub column: usize,
    pub name: String,
    pub n_masked: usize,
    pub kl: f64,
    pub ks: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Summary {
    /// Min, lower median and max. `values` must be non-empty.
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            min: v[0],
            median: v[(v.len() - 1) / 2],
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub kl: Summary,
    pub ks: Summary,
    pub w2: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub per_feature: Vec<FeatureDiscrepancy>,
    pub summary: FeatureSummary,
}

fn check_inputs(truth: &Dataset, imputed: &Dataset, mask: &Mask) -> Result<()> {
    if truth.shape() != imputed.shape() {
        return Err(Error::ShapeMismatch {
            expected: truth.shape(),
            actual: imputed.shape(),
        });
    }
    mask.check_shape(truth.shape())
}

/// RMSE, MAE and R² of `imputed` against `truth` over masked cells only.
/// Both datasets are expected to be on the same (normalized) scale.
pub fn sample_stats(truth: &Dataset, imputed: &Dataset, mask: &Mask) -> Result<SampleStats> {
    check_inputs(truth, imputed, mask)?;
    let pairs: Vec<(f64, f64)> = mask
        .as_array()
        .indexed_iter()
        .filter(|(_, &m)| m)
        .map(|((i, j), _)| (truth.get(i, j), imputed.get(i, j)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::invalid("no masked cells to compare"));
    }
    if pairs.iter().any(|(t, x)| !t.is_finite() || !x.is_finite()) {
        return Err(Error::invalid("masked cells must be finite in both truth and imputation"));
    }
    let n = pairs.len() as f64;
    let sse: f64 = pairs.iter().map(|(t, x)| (x - t) * (x - t)).sum();
    let sae: f64 = pairs.iter().map(|(t, x)| (x - t).abs()).sum();
    let mean_t = pairs.iter().map(|(t, _)| t).sum::<f64>() / n;
    let sst: f64 = pairs.iter().map(|(t, _)| (t - mean_t) * (t - mean_t)).sum();
    let r2 = (sst > 0.0).then(|| 1.0 - sse / sst);
    Ok(SampleStats {
        rmse: (sse / n).sqrt(),
        mae: sae / n,
        r2,
        n_cells: pairs.len(),
    })
}

/// Per-column KL, KS and W2 between the true and imputed values at the
/// masked cells of that column, plus min/median/max over columns.
/// KL is `KL(true || imputed)`. Columns without masked cells are skipped.
pub fn feature_stats(
    truth: &Dataset,
    imputed: &Dataset,
    mask: &Mask,
    kl: KlConfig,
) -> Result<FeatureStats> {
    check_inputs(truth, imputed, mask)?;
    let mut per_feature = Vec::new();
    for j in 0..truth.n_cols() {
        let rows: Vec<usize> = (0..truth.n_rows()).filter(|&i| mask.get(i, j)).collect();
        if rows.is_empty() {
            continue;
        }
        let mut t: Vec<f64> = rows.iter().map(|&i| truth.get(i, j)).collect();
        let mut x: Vec<f64> = rows.iter().map(|&i| imputed.get(i, j)).collect();
        if t.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "column `{}` has non-finite masked values",
                truth.columns()[j].name
            )));
        }
        t.sort_by(f64::total_cmp);
        x.sort_by(f64::total_cmp);
        per_feature.push(FeatureDiscrepancy {
            column: j,
            name: truth.columns()[j].name.clone(),
            n_masked: rows.len(),
            kl: kl_sorted(&t, &x, kl),
            ks: ks_sorted(&t, &x),
            w2: wasserstein2_sorted(&t, &x),
        });
    }
    if per_feature.is_empty() {
        return Err(Error::invalid("no feature has masked cells"));
    }
    let col = |f: fn(&FeatureDiscrepancy) -> f64| per_feature.iter().map(f).collect::<Vec<_>>();
    let summary = FeatureSummary {
        kl: Summary::of(&col(|f| f.kl)),
        ks: Summary::of(&col(|f| f.ks)),
        w2: Summary::of(&col(|f| f.w2)),
    };
    Ok(FeatureStats {
        per_feature,
        summary,
    })
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn full_mask(shape: (usize, usize)) -> Mask {
        Mask::from_array(Array2::from_elem(shape, true))
    }

    fn col(v: &[f64]) -> Dataset {
        Dataset::numeric(Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap(), None).unwrap()
    }

    #[test]
    fn identical_imputation() {
        let t = col(&[1.0, 2.0, 5.0]);
        let s = sample_stats(&t, &t, &full_mask((3, 1))).unwrap();
        assert_eq!((s.rmse, s.mae, s.r2), (0.0, 0.0, Some(1.0)));
        let f = feature_stats(&t, &t, &full_mask((3, 1)), KlConfig::default()).unwrap();
        assert_eq!(f.summary.w2, Summary { min: 0.0, median: 0.0, max: 0.0 });
        assert_eq!(f.summary.ks.max, 0.0);
        assert_eq!(f.summary.kl.max, 0.0);
    }

    #[test]
    fn hand_computed_sample_stats() {
        let s = sample_stats(&col(&[1.0, 3.0]), &col(&[2.0, 2.0]), &full_mask((2, 1))).unwrap();
        assert_eq!((s.rmse, s.mae, s.r2), (1.0, 1.0, Some(0.0)));
        let s = sample_stats(&col(&[1.0, 3.0]), &col(&[3.0, 1.0]), &full_mask((2, 1))).unwrap();
        assert_eq!(s.r2, Some(-3.0));
    }

    #[test]
    fn unmasked_cells_are_ignored() {
        let t = col(&[1.0, 3.0, 100.0]);
        let x = col(&[2.0, 2.0, -50.0]);
        let mut m = Mask::empty((3, 1));
        m.set(0, 0, true);
        m.set(1, 0, true);
        let s = sample_stats(&t, &x, &m).unwrap();
        assert_eq!(s.rmse, 1.0);
        assert_eq!(s.n_cells, 2);
    }

    #[test]
    fn degenerate_truth_gives_no_r2() {
        let s = sample_stats(&col(&[2.0, 2.0]), &col(&[1.0, 3.0]), &full_mask((2, 1))).unwrap();
        assert_eq!(s.r2, None);
    }

    #[test]
    fn errors() {
        let t = col(&[1.0]);
        assert!(sample_stats(&t, &t, &Mask::empty((1, 1))).is_err());
        assert!(feature_stats(&t, &t, &Mask::empty((1, 1)), KlConfig::default()).is_err());
        assert!(sample_stats(&t, &col(&[1.0, 2.0]), &full_mask((1, 1))).is_err());
    }

    #[test]
    fn mean_imputation_shows_up_distributionally() {
        let t = col(&[-1.0, 0.5, 2.0, 3.5]);
        let x = col(&[1.25; 4]);
        let f = feature_stats(&t, &x, &full_mask((4, 1)), KlConfig::default()).unwrap();
        assert!(f.per_feature[0].ks > 0.0);
        assert!(f.per_feature[0].w2 > 0.0);
    }

    #[test]
    fn single_masked_feature_summary_collapses() {
        let t = Dataset::numeric(array![[1.0, 5.0], [2.0, 6.0], [4.0, 7.0]], None).unwrap();
        let x = Dataset::numeric(array![[0.0, 5.0], [2.0, 6.0], [3.0, 7.0]], None).unwrap();
        let mut m = Mask::empty((3, 2));
        m.set(0, 0, true);
        m.set(2, 0, true);
        let f = feature_stats(&t, &x, &m, KlConfig::default()).unwrap();
        assert_eq!(f.per_feature.len(), 1);
        let s = f.summary.w2;
        assert_eq!(s.min, s.median);
        assert_eq!(s.median, s.max);
    }

    #[test]
    fn lower_median_on_even_counts() {
        assert_eq!(Summary::of(&[4.0, 1.0, 3.0, 2.0]).median, 2.0);
        assert_eq!(Summary::of(&[3.0, 1.0, 2.0]).median, 2.0);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.25), 2.0);
        assert_eq!(quantile_sorted(&[1.0, 2.0], 0.5), 1.5);
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(t in proptest::collection::vec(-10.0f64..10.0, 1..30),
                              noise in proptest::collection::vec(-3.0f64..3.0, 30)) {
            let x: Vec<f64> = t.iter().zip(&noise).map(|(a, b)| a + b).collect();
            let s = sample_stats(&col(&t), &col(&x), &full_mask((t.len(), 1))).unwrap();
            prop_assert!(s.rmse >= s.mae - 1e-12);
        }
    }
}
