//! Class C: distributions of 1-D Wasserstein distances over random
//! projections and random half-partitions.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{format_number, Dataset};
use crate::discrepancy::{kl_sorted, ks_sorted, quantile_sorted, wasserstein2_sorted, KlConfig};
use crate::error::{Error, Result};
use crate::partition::HalfPartitionSet;
use crate::seed;

/// Projections whose standard deviation on `I_p` falls below this are skipped.
pub const SD_GUARD: f64 = 1e-12;
/// Ratios `w_hat / w` are not formed when `w` falls below this.
pub const RATIO_GUARD: f64 = 1e-12;

pub fn default_directions(d: usize) -> usize {
    d.max(50)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    /// `M x d`, one unit vector per row.
    pub vectors: Array2<f64>,
    pub seed: u64,
}

impl DirectionSet {
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// `m` directions uniform on the unit sphere in `R^d` (normalized Gaussians).
pub fn sample_unit_directions(d: usize, m: usize, seed: u64) -> Result<DirectionSet> {
    if d == 0 {
        return Err(Error::invalid("directions need d >= 1"));
    }
    if m < d {
        return Err(Error::invalid(format!("need at least d = {d} directions, got {m}")));
    }
    let mut rng = seed::rng(seed);
    let mut vectors = Array2::<f64>::zeros((m, d));
    for mut row in vectors.rows_mut() {
        loop {
            for x in row.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            let norm = row.dot(&row).sqrt();
            if norm > 1e-150 {
                row /= norm;
                break;
            }
        }
    }
    Ok(DirectionSet { vectors, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    ConstantProjection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub r: usize,
    pub p: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicedResult {
    /// Baseline distances, `M x P`. NaN at skipped pairs.
    pub w: Array2<f64>,
    /// Distances with the `J_p` half taken from the imputed data. NaN at skipped pairs.
    pub w_hat: Array2<f64>,
    pub skipped: Vec<SkippedPair>,
    pub directions_seed: u64,
    pub partitions_seed: u64,
}

impl SlicedResult {
    pub fn is_skipped(&self, r: usize, p: usize) -> bool {
        self.w[[r, p]].is_nan()
    }

    /// `(w, w_hat)` over populated pairs in `(r, p)` order.
    pub fn populated(&self) -> Vec<(f64, f64)> {
        self.w
            .iter()
            .zip(self.w_hat.iter())
            .filter(|(w, _)| !w.is_nan())
            .map(|(&w, &wh)| (w, wh))
            .collect()
    }

    /// Writes `r,p,w,w_hat,skipped` rows; skipped pairs have empty distances.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,p,w,w_hat,skipped")?;
        for ((r, p), &w) in self.w.indexed_iter() {
            if w.is_nan() {
                writeln!(out, "{r},{p},,,1")?;
            } else {
                let wh = self.w_hat[[r, p]];
                writeln!(out, "{r},{p},{},{},0", format_number(w), format_number(wh))?;
            }
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

fn population_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Baseline and imputed sliced distances for every (direction, partition).
///
/// For direction `r` and partition `(I_p, J_p)`, projections are divided by
/// the population sd `s` of the original `I_p` projections. The baseline
/// compares original `I_p` to original `J_p`; the imputed distance compares
/// original `I_p` to imputed `J_p`.
pub fn sliced_distances(
    original: &Dataset,
    imputed: &Dataset,
    dirs: &DirectionSet,
    halves: &HalfPartitionSet,
) -> Result<SlicedResult> {
    if original.shape() != imputed.shape() {
        return Err(Error::ShapeMismatch {
            expected: original.shape(),
            actual: imputed.shape(),
        });
    }
    if dirs.dim() != original.n_cols() {
        return Err(Error::ShapeMismatch {
            expected: (dirs.len(), original.n_cols()),
            actual: dirs.vectors.dim(),
        });
    }
    let n = original.n_rows();
    for (i, j) in &halves.pairs {
        if i.iter().chain(j).any(|&k| k >= n) {
            return Err(Error::invalid("half partition indexes past the data"));
        }
    }
    if !original.is_complete() || !imputed.is_complete() {
        return Err(Error::invalid("sliced distances need complete data"));
    }
    // N x M projection matrices
    let proj = original.values().dot(&dirs.vectors.t());
    let proj_hat = imputed.values().dot(&dirs.vectors.t());
    let (m, p_count) = (dirs.len(), halves.len());

    let cells: Vec<Option<(f64, f64)>> = (0..m * p_count)
        .into_par_iter()
        .map(|k| {
            let (r, p) = (k / p_count, k % p_count);
            let (rows_i, rows_j) = &halves.pairs[p];
            let col = proj.index_axis(Axis(1), r);
            let col_hat = proj_hat.index_axis(Axis(1), r);
            let xi: Vec<f64> = rows_i.iter().map(|&i| col[i]).collect();
            let s = population_sd(&xi);
            if !(s >= SD_GUARD) {
                return None;
            }
            let scaled = |src: &[usize], c: ndarray::ArrayView1<f64>| {
                let mut v: Vec<f64> = src.iter().map(|&i| c[i] / s).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            let a = scaled(rows_i, col);
            let b = scaled(rows_j, col);
            let b_hat = scaled(rows_j, col_hat);
            Some((wasserstein2_sorted(&a, &b), wasserstein2_sorted(&a, &b_hat)))
        })
        .collect();

    let mut w = Array2::from_elem((m, p_count), f64::NAN);
    let mut w_hat = Array2::from_elem((m, p_count), f64::NAN);
    let mut skipped = Vec::new();
    for (k, cell) in cells.into_iter().enumerate() {
        let (r, p) = (k / p_count, k % p_count);
        match cell {
            Some((a, b)) => {
                w[[r, p]] = a;
                w_hat[[r, p]] = b;
            }
            None => skipped.push(SkippedPair {
                r,
                p,
                reason: SkipReason::ConstantProjection,
            }),
        }
    }
    Ok(SlicedResult {
        w,
        w_hat,
        skipped,
        directions_seed: dirs.seed,
        partitions_seed: halves.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCStats {
    pub kl: f64,
    pub ks: f64,
    pub w2: f64,
    pub ratios: Vec<f64>,
    /// `None` when every populated pair was guarded.
    pub ratio_median: Option<f64>,
    pub ratio_iqr: Option<f64>,
    pub n_pairs: usize,
    pub n_skipped: usize,
    pub n_guarded: usize,
}

/// Compares the sample of baseline distances with the sample of imputed
/// distances using the feature-wise kernels (KL is `KL(w || w_hat)`).
pub fn class_c_stats(res: &SlicedResult, bins: usize) -> Result<ClassCStats> {
    let pairs = res.populated();
    if pairs.is_empty() {
        return Err(Error::invalid("every (direction, partition) pair was skipped"));
    }
    if pairs.len() < 2 {
        return Err(Error::invalid("class C statistics need at least two populated pairs"));
    }
    if bins < 2 {
        return Err(Error::invalid("KL needs at least two bins"));
    }
    let mut w: Vec<f64> = pairs.iter().map(|x| x.0).collect();
    let mut w_hat: Vec<f64> = pairs.iter().map(|x| x.1).collect();
    w.sort_by(f64::total_cmp);
    w_hat.sort_by(f64::total_cmp);
    let kl_cfg = KlConfig {
        bins,
        ..KlConfig::default()
    };

    let ratios: Vec<f64> = pairs
        .iter()
        .filter(|(w, _)| *w >= RATIO_GUARD)
        .map(|(w, wh)| wh / w)
        .collect();
    let n_guarded = pairs.len() - ratios.len();
    let (ratio_median, ratio_iqr) = if ratios.is_empty() {
        (None, None)
    } else {
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        (
            Some(quantile_sorted(&sorted, 0.5)),
            Some(quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)),
        )
    };
    Ok(ClassCStats {
        kl: kl_sorted(&w, &w_hat, kl_cfg),
        ks: ks_sorted(&w, &w_hat),
        w2: wasserstein2_sorted(&w, &w_hat),
        ratios,
        ratio_median,
        ratio_iqr,
        n_pairs: pairs.len(),
        n_skipped: res.skipped.len(),
        n_guarded,
    })
}

/// Fraction of `(feature, repeat)` distances strictly above each threshold.
pub fn outlier_proportions(
    per_feature_w2: &BTreeMap<(String, usize), f64>,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if per_feature_w2.is_empty() {
        return Err(Error::invalid("no distances for outlier analysis"));
    }
    let n = per_feature_w2.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let above = per_feature_w2.values().filter(|&&v| v > t).count();
            (t, above as f64 / n)
        })
        .collect())
}

/// Thresholds at the given quantiles of the observed distances, a
/// scale-free alternative to fixed absolute thresholds.
pub fn quantile_thresholds(
    per_feature_w2: &BTreeMap<(String, usize), f64>,
    quantiles: &[f64],
) -> Result<Vec<f64>> {
    if per_feature_w2.is_empty() {
        return Err(Error::invalid("no distances for outlier analysis"));
    }
    if quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::invalid("quantiles must lie in [0, 1]"));
    }
    let mut v: Vec<f64> = per_feature_w2.values().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(quantiles.iter().map(|&q| quantile_sorted(&v, q)).collect())
}
