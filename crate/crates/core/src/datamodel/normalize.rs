use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Per-column mean and population standard deviation fitted on a subset of
/// rows (the development set). Columns whose sd is zero get sd 1 and are
/// listed in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub degenerate: Vec<usize>,
}

impl Normalizer {
    /// Fit over the observed cells of `rows`. Missing cells are skipped.
    pub fn fit(ds: &Dataset, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("cannot fit a normalizer on zero rows"));
        }
        let d = ds.n_cols();
        let mut means = Vec::with_capacity(d);
        let mut sds = Vec::with_capacity(d);
        let mut degenerate = Vec::new();
        for j in 0..d {
            let observed: Vec<f64> = rows
                .iter()
                .map(|&i| ds.get(i, j))
                .filter(|v| !v.is_nan())
                .collect();
            if observed.is_empty() {
                return Err(Error::NoObservedCells(ds.columns()[j].name.clone()));
            }
            let n = observed.len() as f64;
            let mean = observed.iter().sum::<f64>() / n;
            let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let mut sd = var.sqrt();
            if sd == 0.0 {
                sd = 1.0;
                degenerate.push(j);
            }
            means.push(mean);
            sds.push(sd);
        }
        Ok(Self {
            means,
            sds,
            degenerate,
        })
    }

    pub fn fit_all(ds: &Dataset) -> Result<Self> {
        let rows: Vec<usize> = (0..ds.n_rows()).collect();
        Self::fit(ds, &rows)
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        self.check(ds)?;
        let mut values = ds.values().clone();
        for (j, mut col) in values.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[j], self.sds[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        ds.with_values(values)
    }

    pub fn invert(&self, ds: &Dataset) -> Result<Dataset> {
        self.check(ds)?;
        let mut values = ds.values().clone();
        for (j, mut col) in values.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[j], self.sds[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        ds.with_values(values)
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if ds.n_cols() != self.means.len() {
            return Err(Error::ShapeMismatch {
                expected: (ds.n_rows(), self.means.len()),
                actual: ds.shape(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn population_sd() {
        let ds = Dataset::numeric(array![[1.0], [2.0], [3.0], [100.0]], None).unwrap();
        let nz = Normalizer::fit(&ds, &[0, 1, 2]).unwrap();
        assert_eq!(nz.means, vec![2.0]);
        assert!((nz.sds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_column_is_flagged() {
        let ds = Dataset::numeric(array![[5.0, 1.0], [5.0, 2.0]], None).unwrap();
        let nz = Normalizer::fit_all(&ds).unwrap();
        assert_eq!(nz.means[0], 5.0);
        assert_eq!(nz.sds[0], 1.0);
        assert_eq!(nz.degenerate, vec![0]);
    }

    #[test]
    fn all_rows_gives_column_means() {
        let ds = Dataset::numeric(array![[1.0, 10.0], [3.0, 20.0]], None).unwrap();
        let nz = Normalizer::fit_all(&ds).unwrap();
        assert_eq!(nz.means, vec![2.0, 15.0]);
    }

    #[test]
    fn missing_cells_are_skipped_and_stay_missing() {
        let ds = Dataset::numeric(array![[f64::NAN], [4.0], [0.0]], None).unwrap();
        let nz = Normalizer::fit_all(&ds).unwrap();
        assert_eq!(nz.means, vec![2.0]);
        assert_eq!(nz.sds, vec![2.0]);
        let z = nz.apply(&ds).unwrap();
        assert!(z.is_missing(0, 0));
        assert_eq!(z.get(1, 0), 1.0);
    }

    #[test]
    fn unobserved_column_is_an_error() {
        let ds = Dataset::numeric(array![[f64::NAN, 1.0], [f64::NAN, 2.0]], None).unwrap();
        let err = Normalizer::fit_all(&ds).unwrap_err();
        assert!(err.to_string().contains("x0"), "{err}");
    }

    #[test]
    fn shape_mismatch() {
        let a = Dataset::numeric(array![[1.0, 2.0]], None).unwrap();
        let b = Dataset::numeric(array![[1.0]], None).unwrap();
        let nz = Normalizer::fit_all(&a).unwrap();
        assert!(nz.apply(&b).is_err());
    }

    proptest! {
        #[test]
        fn invert_undoes_apply(vals in proptest::collection::vec(-1e3f64..1e3, 12)) {
            let ds = Dataset::numeric(Array2::from_shape_vec((4, 3), vals).unwrap(), None).unwrap();
            let nz = Normalizer::fit_all(&ds).unwrap();
            let back = nz.invert(&nz.apply(&ds).unwrap()).unwrap();
            for (a, b) in ds.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
