//! Exchange format for imputations produced by other tools: one complete CSV
//! per repeat named `<prefix>.imp<k>.csv`, `k` counting from 1.

use std::path::{Path, PathBuf};

use super::{ImputationSet, ImputeMethod, Provenance};
use crate::datamodel::{load_dataset_with_schema, write_dataset, Dataset};
use crate::error::{Error, Result};

/// Observed cells of an external completion must match the reference this closely.
pub const OBSERVED_TOLERANCE: f64 = 1e-9;

pub fn exchange_path(prefix: &str, k: usize) -> PathBuf {
    PathBuf::from(format!("{prefix}.imp{k}.csv"))
}

/// Check a completion against the incomplete reference it was produced from.
pub fn check_completion(reference: &Dataset, completion: &Dataset) -> Result<()> {
    if reference.shape() != completion.shape() {
        return Err(Error::ShapeMismatch {
            expected: reference.shape(),
            actual: completion.shape(),
        });
    }
    for ((i, j), &r) in reference.values().indexed_iter() {
        let c = completion.get(i, j);
        let column = reference.columns()[j].name.clone();
        if c.is_nan() {
            return Err(Error::RemainingMissing { row: i, column });
        }
        if !r.is_nan() && (r - c).abs() > OBSERVED_TOLERANCE {
            return Err(Error::ObservedCellMismatch {
                row: i,
                column,
                expected: r,
                found: c,
            });
        }
    }
    Ok(())
}

/// Load external completions of `reference` (NaN marks the cells that were
/// to be imputed).
pub fn load_external_imputation(
    paths: &[PathBuf],
    reference: &Dataset,
    label_column: Option<&str>,
) -> Result<ImputationSet> {
    if paths.is_empty() {
        return Err(Error::invalid("no external imputation files given"));
    }
    let mut completions = Vec::with_capacity(paths.len());
    let mut provenance = Vec::with_capacity(paths.len());
    for (k, path) in paths.iter().enumerate() {
        let ds = load_dataset_with_schema(path, reference.schema(), label_column)?;
        check_completion(reference, &ds)?;
        completions.push(ds);
        provenance.push(Provenance {
            method: ImputeMethod::External,
            repeat: k,
            seed: None,
            mice: None,
            source: Some(path.display().to_string()),
        });
    }
    Ok(ImputationSet {
        completions,
        provenance,
    })
}

/// Write every completion to `<prefix>.imp<k>.csv` and return the paths.
pub fn write_imputation_set(
    set: &ImputationSet,
    prefix: &str,
    label_column: Option<&str>,
) -> Result<Vec<PathBuf>> {
    set.completions
        .iter()
        .enumerate()
        .map(|(k, ds)| {
            let path = exchange_path(prefix, k + 1);
            write_dataset(ds, &path, label_column)?;
            Ok(path)
        })
        .collect()
}

pub fn exchange_paths(prefix: &Path, repeats: usize) -> Vec<PathBuf> {
    let prefix = prefix.display().to_string();
    (1..=repeats).map(|k| exchange_path(&prefix, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imputers::{impute_multiple, ImputerConfig};
    use ndarray::array;

    fn reference() -> (Dataset, Dataset) {
        let truth = Dataset::numeric(array![[1.0, 2.0], [3.5, -4.25], [0.1, 7.0]], None).unwrap();
        let mut v = truth.values().clone();
        v[[1, 0]] = f64::NAN;
        v[[2, 1]] = f64::NAN;
        (truth.clone(), truth.with_values(v).unwrap())
    }

    #[test]
    fn round_trip_through_files() {
        let (_, incomplete) = reference();
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("run").display().to_string();
        let cfg = ImputerConfig {
            repeats: 2,
            ..ImputerConfig::new(ImputeMethod::Mice, 4)
        };
        let set = impute_multiple(&incomplete, &incomplete, &cfg).unwrap();
        let paths = write_imputation_set(&set, &prefix, None).unwrap();
        assert!(paths[0].ends_with("run.imp1.csv"));
        let back = load_external_imputation(&paths, &incomplete, None).unwrap();
        for (a, b) in set.completions.iter().zip(&back.completions) {
            assert_eq!(a.values(), b.values());
        }
        assert_eq!(back.provenance[1].method, ImputeMethod::External);
    }

    #[test]
    fn ground_truth_is_accepted() {
        let (truth, incomplete) = reference();
        assert!(check_completion(&incomplete, &truth).is_ok());
    }

    #[test]
    fn disturbed_observed_cell_is_rejected() {
        let (truth, incomplete) = reference();
        let mut v = truth.values().clone();
        v[[0, 0]] += 0.1;
        let err = check_completion(&incomplete, &truth.with_values(v).unwrap()).unwrap_err();
        assert!(err.to_string().starts_with("observed-cell mismatch"), "{err}");
    }

    #[test]
    fn remaining_missing_cell_is_rejected() {
        let (_, incomplete) = reference();
        assert!(matches!(
            check_completion(&incomplete, &incomplete),
            Err(Error::RemainingMissing { row: 1, .. })
        ));
    }

    #[test]
    fn shape_mismatch() {
        let (truth, incomplete) = reference();
        let short = truth.select_rows(&[0, 1]);
        assert!(matches!(
            check_completion(&incomplete, &short),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
