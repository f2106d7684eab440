use ndarray::Array1;

use super::Completion;
use crate::datamodel::Dataset;
use crate::error::{Error, Result};

/// Per-column mean over the observed training cells.
pub(crate) fn observed_means(train: &Dataset) -> Result<Array1<f64>> {
    let mut means = Array1::zeros(train.n_cols());
    for (j, col) in train.values().columns().into_iter().enumerate() {
        let (sum, count) = col
            .iter()
            .filter(|v| !v.is_nan())
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count == 0 {
            return Err(Error::NoObservedCells(train.columns()[j].name.clone()));
        }
        means[j] = sum / count as f64;
    }
    Ok(means)
}

fn fill(ds: &Dataset, means: &Array1<f64>) -> Dataset {
    let mut values = ds.values().clone();
    for mut row in values.rows_mut() {
        for (v, m) in row.iter_mut().zip(means) {
            if v.is_nan() {
                *v = *m;
            }
        }
    }
    ds.with_values(values).expect("same shape")
}

pub(crate) fn mean_joint(train: &Dataset, target: &Dataset) -> Result<Completion> {
    let means = observed_means(train)?;
    Ok(Completion {
        train: fill(train, &means),
        target: fill(target, &means),
    })
}

/// Replace every missing cell of `target` by the mean of the observed
/// training cells of its column.
pub fn impute_mean(train: &Dataset, target: &Dataset) -> Result<Dataset> {
    super::check_pair(train, target)?;
    Ok(mean_joint(train, target)?.target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn fills_with_training_mean() {
        let train = Dataset::numeric(array![[1.0, 5.0], [2.0, f64::NAN], [3.0, 7.0]], None).unwrap();
        let target = Dataset::numeric(array![[f64::NAN, f64::NAN], [9.0, 1.0]], None).unwrap();
        let out = impute_mean(&train, &target).unwrap();
        assert_eq!(out.values(), &array![[2.0, 6.0], [9.0, 1.0]]);
    }

    #[test]
    fn complete_target_unchanged() {
        let train = Dataset::numeric(array![[1.0], [3.0]], None).unwrap();
        let target = Dataset::numeric(array![[4.0], [-1.0]], None).unwrap();
        assert_eq!(impute_mean(&train, &target).unwrap(), target);
    }

    #[test]
    fn fully_missing_training_column() {
        let train = Dataset::numeric(array![[1.0, f64::NAN], [3.0, f64::NAN]], None).unwrap();
        let target = Dataset::numeric(array![[4.0, 1.0]], None).unwrap();
        assert!(matches!(
            impute_mean(&train, &target),
            Err(Error::NoObservedCells(_))
        ));
    }
}
