use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::schema::{Column, ColumnKind, FeatureSchema};
use crate::error::{Error, Result};

/// An N×d matrix of encoded values plus the schema it was encoded from.
///
/// Missing cells hold `NaN`. Labels, when present, are kept out of the value
/// matrix and are never imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
    columns: Vec<Column>,
    schema: FeatureSchema,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn new(
        values: Array2<f64>,
        columns: Vec<Column>,
        schema: FeatureSchema,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if values.ncols() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} value columns but {} encoded columns",
                values.ncols(),
                columns.len()
            )));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.feature >= schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "column {j} points at feature {} of {}",
                    c.feature,
                    schema.len()
                )));
            }
        }
        if let Some(l) = &labels {
            if l.len() != values.nrows() {
                return Err(Error::ShapeMismatch {
                    expected: (values.nrows(), 1),
                    actual: (l.len(), 1),
                });
            }
            if l.iter().any(|&y| y > 1) {
                return Err(Error::invalid("labels must be 0 or 1"));
            }
        }
        Ok(Self {
            values,
            columns,
            schema,
            labels,
        })
    }

    /// All-numeric dataset with generated column names.
    pub fn numeric(values: Array2<f64>, labels: Option<Vec<u8>>) -> Result<Self> {
        let schema = FeatureSchema::numeric(values.ncols());
        let columns = schema.encode_columns(|_| unreachable!());
        Self::new(values, columns, schema, labels)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.values[[i, j]].is_nan()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| !v.is_nan())
    }

    /// Encoded column indices per raw feature, in schema order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.schema.len()];
        for (j, c) in self.columns.iter().enumerate() {
            groups[c.feature].push(j);
        }
        groups
    }

    pub fn is_one_hot(&self, j: usize) -> bool {
        matches!(self.columns[j].kind, ColumnKind::OneHot { .. })
    }

    /// Same schema and labels, new values.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.values.dim(),
                actual: values.dim(),
            });
        }
        Ok(Self {
            values,
            columns: self.columns.clone(),
            schema: self.schema.clone(),
            labels: self.labels.clone(),
        })
    }

    pub fn with_labels(mut self, labels: Option<Vec<u8>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n_rows() || l.iter().any(|&y| y > 1) {
                return Err(Error::invalid("labels must be 0/1 with one entry per row"));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), rows),
            columns: self.columns.clone(),
            schema: self.schema.clone(),
            labels: self
                .labels
                .as_ref()
                .map(|l| rows.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Copy with every cell marked in `mask` set to missing.
    pub fn masked(&self, mask: &Mask) -> Result<Self> {
        mask.check_shape(self.shape())?;
        let mut values = self.values.clone();
        ndarray::Zip::from(&mut values)
            .and(mask.as_array())
            .for_each(|v, &m| {
                if m {
                    *v = f64::NAN;
                }
            });
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    /// Stack datasets sharing a schema, top to bottom.
    pub fn vstack(parts: &[&Dataset]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("nothing to stack"))?;
        let mut views = Vec::with_capacity(parts.len());
        for p in parts {
            if p.columns != first.columns {
                return Err(Error::SchemaMismatch("stacked datasets differ in columns".into()));
            }
            views.push(p.values.view());
        }
        let values = ndarray::concatenate(Axis(0), &views).expect("same column count");
        let labels = if parts.iter().all(|p| p.labels.is_some()) {
            Some(
                parts
                    .iter()
                    .flat_map(|p| p.labels.clone().unwrap())
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self {
            values,
            columns: first.columns.clone(),
            schema: first.schema.clone(),
            labels,
        })
    }
}

/// N×d boolean matrix; `true` marks a missing (removed) cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    missing: Array2<bool>,
}

impl Mask {
    pub fn empty(shape: (usize, usize)) -> Self {
        Self {
            missing: Array2::from_elem(shape, false),
        }
    }

    pub fn from_array(missing: Array2<bool>) -> Self {
        Self { missing }
    }

    /// Mask of the cells that are currently missing in `ds`.
    pub fn of_missing(ds: &Dataset) -> Self {
        Self {
            missing: ds.values.mapv(f64::is_nan),
        }
    }

    pub fn as_array(&self) -> &Array2<bool> {
        &self.missing
    }

    pub fn shape(&self) -> (usize, usize) {
        self.missing.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.missing[[i, j]]
    }

    pub fn set(&mut self, i: usize, j: usize, missing: bool) {
        self.missing[[i, j]] = missing;
    }

    pub fn count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn column_count(&self, j: usize) -> usize {
        self.missing.column(j).iter().filter(|&&m| m).count()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            missing: self.missing.select(Axis(0), rows),
        }
    }

    pub fn vstack(parts: &[&Mask]) -> Self {
        let views: Vec<_> = parts.iter().map(|m| m.missing.view()).collect();
        Self {
            missing: ndarray::concatenate(Axis(0), &views).expect("same column count"),
        }
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: self.shape(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn masked_sets_nan_and_keeps_source() {
        let ds = Dataset::numeric(array![[1.0, 2.0], [3.0, 4.0]], None).unwrap();
        let mut mask = Mask::empty((2, 2));
        mask.set(1, 0, true);
        let m = ds.masked(&mask).unwrap();
        assert!(m.is_missing(1, 0));
        assert_eq!(m.missing_count(), 1);
        assert!(ds.is_complete());
        assert_eq!(Mask::of_missing(&m), mask);
    }

    #[test]
    fn select_and_stack_keep_labels() {
        let ds = Dataset::numeric(array![[1.0], [2.0], [3.0]], Some(vec![0, 1, 0])).unwrap();
        let a = ds.select_rows(&[2, 0]);
        assert_eq!(a.labels(), Some(&[0u8, 0][..]));
        let b = ds.select_rows(&[1]);
        let s = Dataset::vstack(&[&a, &b]).unwrap();
        assert_eq!(s.values().column(0).to_vec(), vec![3.0, 1.0, 2.0]);
        assert_eq!(s.labels(), Some(&[0u8, 0, 1][..]));
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(Dataset::numeric(array![[1.0]], Some(vec![2])).is_err());
        assert!(Dataset::numeric(array![[1.0]], Some(vec![0, 1])).is_err());
    }
}
