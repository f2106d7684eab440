use super::dataset::Dataset;
use super::schema::{argmax_lowest, ColumnKind};

/// Snap imputed values back onto each column's valid support.
///
/// One-hot groups get a single 1 at the argmax (lowest index on ties),
/// binary columns are thresholded at 0.5 with 0.5 itself going to 0, and
/// ordinal columns are rounded and clamped to their level range. Numeric
/// columns and missing cells are left alone.
pub fn postprocess_imputed(ds: &Dataset) -> Dataset {
    let mut values = ds.values().clone();
    for (j, col) in ds.columns().iter().enumerate() {
        match col.kind {
            ColumnKind::Binary => values
                .column_mut(j)
                .mapv_inplace(|v| if v.is_nan() { v } else if v > 0.5 { 1.0 } else { 0.0 }),
            ColumnKind::Ordinal { min, max } => values
                .column_mut(j)
                .mapv_inplace(|v| if v.is_nan() { v } else { v.round().clamp(min, max) }),
            ColumnKind::Numeric | ColumnKind::OneHot { .. } => {}
        }
    }
    for group in ds.groups() {
        if !ds.is_one_hot(group[0]) {
            continue;
        }
        for i in 0..ds.n_rows() {
            let block: Vec<f64> = group.iter().map(|&j| values[[i, j]]).collect();
            if let Some(best) = argmax_lowest(&block) {
                for (k, &j) in group.iter().enumerate() {
                    values[[i, j]] = if k == best { 1.0 } else { 0.0 };
                }
            }
        }
    }
    ds.with_values(values).expect("shape unchanged")
}
