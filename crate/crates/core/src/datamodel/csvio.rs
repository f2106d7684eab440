//! CSV wire format for datasets and masks.
//!
//! Data files carry a header row of raw feature names (plus an optional label
//! column), `.` as decimal separator and an empty cell for a missing value.
//! Mask files have one 0/1 column per raw feature, `1` meaning missing.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::dataset::{Dataset, Mask};
use super::schema::{
    decode_level, ordinal_level_index, ColumnKind, FeatureKind, FeatureSchema, FeatureSpec,
};
use crate::error::{Error, Result};

pub fn load_dataset(
    data_path: &Path,
    schema_path: &Path,
    label_column: Option<&str>,
) -> Result<Dataset> {
    let schema = FeatureSchema::from_json_file(schema_path)?;
    load_dataset_with_schema(data_path, &schema, label_column)
}

pub fn load_dataset_with_schema(
    data_path: &Path,
    schema: &FeatureSchema,
    label_column: Option<&str>,
) -> Result<Dataset> {
    let file = std::fs::File::open(data_path).map_err(|e| Error::io(data_path, e))?;
    read_dataset(file, schema, label_column).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: data_path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Parse a dataset from any reader. Categorical features are one-hot
/// encoded, ordinal levels are coded as their zero-based index.
pub fn read_dataset<R: Read>(
    reader: R,
    schema: &FeatureSchema,
    label_column: Option<&str>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |source| Error::Csv {
        path: "<reader>".into(),
        source,
    };
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();

    // position in the CSV of each schema feature
    let mut source_col = vec![usize::MAX; schema.len()];
    let mut label_idx = None;
    for (k, name) in header.iter().enumerate() {
        if Some(name.as_str()) == label_column {
            label_idx = Some(k);
            continue;
        }
        match schema.position(name) {
            Some(f) if source_col[f] == usize::MAX => source_col[f] = k,
            Some(_) => {
                return Err(Error::SchemaMismatch(format!("column `{name}` appears twice")))
            }
            None => {
                return Err(Error::SchemaMismatch(format!(
                    "column `{name}` is not in the schema"
                )))
            }
        }
    }
    if let Some(f) = source_col.iter().position(|&k| k == usize::MAX) {
        return Err(Error::SchemaMismatch(format!(
            "schema feature `{}` is absent from the header",
            schema.entries()[f].name
        )));
    }
    if let (Some(name), None) = (label_column, label_idx) {
        return Err(Error::SchemaMismatch(format!("label column `{name}` not found")));
    }

    let mut raw_rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    // ordinal features without levels: observed (min, max) per feature
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); schema.len()];
    let width: usize = schema
        .entries()
        .iter()
        .map(|e| match e.kind {
            FeatureKind::Categorical => e.levels.as_ref().map_or(0, Vec::len),
            _ => 1,
        })
        .sum();

    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let mut out = Vec::with_capacity(width);
        for (f, spec) in schema.entries().iter().enumerate() {
            let cell = record.get(source_col[f]).unwrap_or("");
            match spec.kind {
                FeatureKind::Categorical => {
                    let k = spec.levels.as_ref().map_or(0, Vec::len);
                    if cell.is_empty() {
                        out.extend(std::iter::repeat_n(f64::NAN, k));
                    } else {
                        let block = super::schema::encode_level(spec, cell).ok_or_else(|| {
                            Error::UnknownLevel {
                                row,
                                column: spec.name.clone(),
                                value: cell.to_string(),
                            }
                        })?;
                        out.extend(block);
                    }
                }
                FeatureKind::Ordinal if spec.levels.is_some() => {
                    if cell.is_empty() {
                        out.push(f64::NAN);
                    } else {
                        let idx = ordinal_level_index(spec, cell).ok_or_else(|| {
                            Error::UnknownLevel {
                                row,
                                column: spec.name.clone(),
                                value: cell.to_string(),
                            }
                        })?;
                        out.push(idx as f64);
                    }
                }
                _ => {
                    let v = parse_number(cell).ok_or_else(|| Error::NonNumeric {
                        row,
                        column: spec.name.clone(),
                        value: cell.to_string(),
                    })?;
                    if spec.kind == FeatureKind::Ordinal && !v.is_nan() {
                        let r = &mut ranges[f];
                        r.0 = r.0.min(v);
                        r.1 = r.1.max(v);
                    }
                    out.push(v);
                }
            }
        }
        if let Some(k) = label_idx {
            let cell = record.get(k).unwrap_or("");
            let y = match parse_number(cell) {
                Some(0.0) => 0u8,
                Some(1.0) => 1u8,
                _ => {
                    return Err(Error::NonNumeric {
                        row,
                        column: label_column.unwrap_or_default().to_string(),
                        value: cell.to_string(),
                    })
                }
            };
            labels.push(y);
        }
        raw_rows.push(out);
    }

    let columns = schema.encode_columns(|f| {
        let (lo, hi) = ranges[f];
        if lo.is_finite() {
            (lo, hi)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    });
    let n = raw_rows.len();
    let values = Array2::from_shape_vec((n, width), raw_rows.into_iter().flatten().collect())
        .expect("every row has the encoded width");
    Dataset::new(
        values,
        columns,
        schema.clone(),
        label_idx.map(|_| labels),
    )
}

/// Empty string is missing; anything else must be a finite number.
fn parse_number(cell: &str) -> Option<f64> {
    if cell.is_empty() {
        return Some(f64::NAN);
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Write `ds` back in its raw form: one-hot blocks become level names and
/// ordinal indices become level names where the schema declares them.
pub fn write_dataset(ds: &Dataset, path: &Path, label_column: Option<&str>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(ds, file, label_column).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn write_dataset_to<W: Write>(ds: &Dataset, writer: W, label_column: Option<&str>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |source| Error::Csv {
        path: "<writer>".into(),
        source,
    };
    let schema = ds.schema();
    let mut header: Vec<&str> = schema.entries().iter().map(|e| e.name.as_str()).collect();
    let labels = match (label_column, ds.labels()) {
        (Some(name), Some(l)) => {
            header.push(name);
            Some(l)
        }
        _ => None,
    };
    w.write_record(&header).map_err(csv_err)?;
    let groups = ds.groups();
    for i in 0..ds.n_rows() {
        let row = ds.row(i);
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for (f, spec) in schema.entries().iter().enumerate() {
            let cols = &groups[f];
            let first = row[cols[0]];
            let cell = match spec.kind {
                FeatureKind::Categorical => {
                    let block: Vec<f64> = cols.iter().map(|&j| row[j]).collect();
                    if block.iter().all(|v| v.is_nan()) {
                        String::new()
                    } else {
                        decode_level(spec, &block).unwrap_or_default().to_string()
                    }
                }
                FeatureKind::Ordinal if spec.levels.is_some() => {
                    let levels = spec.levels.as_ref().unwrap();
                    if first.is_nan() {
                        String::new()
                    } else if first.fract() == 0.0 && first >= 0.0 && (first as usize) < levels.len()
                    {
                        levels[first as usize].clone()
                    } else {
                        format_number(first)
                    }
                }
                _ => format_number(first),
            };
            record.push(cell);
        }
        if let Some(l) = labels {
            record.push(l[i].to_string());
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Shortest round-trip representation; empty for missing.
pub(crate) fn format_number(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Write a feature-level mask: a raw feature is `1` when any of its encoded
/// columns is masked.
pub fn write_mask(mask: &Mask, ds: &Dataset, path: &Path) -> Result<()> {
    mask.check_shape(ds.shape())?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let names: Vec<&str> = ds.schema().entries().iter().map(|e| e.name.as_str()).collect();
    w.write_record(&names).map_err(csv_err)?;
    let groups = ds.groups();
    for i in 0..ds.n_rows() {
        let rec: Vec<&str> = groups
            .iter()
            .map(|cols| if cols.iter().any(|&j| mask.get(i, j)) { "1" } else { "0" })
            .collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a feature-level mask and expand it onto the encoded columns of `ds`.
pub fn read_mask(path: &Path, ds: &Dataset) -> Result<Mask> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let schema = ds.schema();
    let mut feature_of = Vec::with_capacity(header.len());
    for name in &header {
        let f = schema
            .position(name)
            .ok_or_else(|| Error::SchemaMismatch(format!("mask column `{name}` is not in the schema")))?;
        feature_of.push(f);
    }
    if header.len() != schema.len() {
        return Err(Error::SchemaMismatch(format!(
            "mask has {} columns, schema has {} features",
            header.len(),
            schema.len()
        )));
    }
    let groups = ds.groups();
    let mut mask = Mask::empty(ds.shape());
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if i >= ds.n_rows() {
            return Err(Error::ShapeMismatch {
                expected: (ds.n_rows(), schema.len()),
                actual: (i + 1, header.len()),
            });
        }
        for (k, cell) in record.iter().enumerate() {
            let missing = match cell {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::NonNumeric {
                        row: i,
                        column: header[k].clone(),
                        value: other.to_string(),
                    })
                }
            };
            for &j in &groups[feature_of[k]] {
                mask.set(i, j, missing);
            }
        }
        rows += 1;
    }
    if rows != ds.n_rows() {
        return Err(Error::ShapeMismatch {
            expected: (ds.n_rows(), schema.len()),
            actual: (rows, header.len()),
        });
    }
    Ok(mask)
}

/// Schema treating every header column except the label as numeric.
pub fn infer_numeric_schema(data_path: &Path, label_column: Option<&str>) -> Result<FeatureSchema> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(data_path)
        .map_err(|source| Error::Csv {
            path: data_path.to_path_buf(),
            source,
        })?;
    let header = rdr.headers().map_err(|source| Error::Csv {
        path: data_path.to_path_buf(),
        source,
    })?;
    let entries = header
        .iter()
        .filter(|h| Some(*h) != label_column)
        .map(FeatureSpec::numeric)
        .collect();
    FeatureSchema::new(entries)
}

/// True when every encoded column of `ds` is a plain real-valued column.
pub fn all_numeric(ds: &Dataset) -> bool {
    ds.columns().iter().all(|c| c.kind == ColumnKind::Numeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_schema_from_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,y,b\n1,0,2\n").unwrap();
        let schema = infer_numeric_schema(&path, Some("y")).unwrap();
        let names: Vec<&str> = schema.entries().iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
        let ds = load_dataset_with_schema(&path, &schema, Some("y")).unwrap();
        assert_eq!(ds.labels(), Some(&[0u8][..]));
    }

    fn schema_abc() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::numeric("x"),
            FeatureSpec::categorical("c", &["A", "B", "C"]),
        ])
        .unwrap()
    }

    #[test]
    fn empty_cell_is_missing() {
        let csv = "a,b\n1,2\n,4\n5,6\n";
        let schema = FeatureSchema::new(vec![FeatureSpec::numeric("a"), FeatureSpec::numeric("b")])
            .unwrap();
        let ds = read_dataset(csv.as_bytes(), &schema, None).unwrap();
        assert_eq!(ds.shape(), (3, 2));
        assert_eq!(ds.missing_count(), 1);
        assert!(ds.is_missing(1, 0));
    }

    #[test]
    fn categorical_value_is_one_hot() {
        let csv = "x,c\n1.5,B\n";
        let ds = read_dataset(csv.as_bytes(), &schema_abc(), None).unwrap();
        assert_eq!(ds.row(0).to_vec(), vec![1.5, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn missing_categorical_blanks_whole_group() {
        let ds = read_dataset("x,c\n1,\n".as_bytes(), &schema_abc(), None).unwrap();
        assert_eq!(ds.missing_count(), 3);
    }

    #[test]
    fn header_not_in_schema_is_a_mismatch() {
        let err = read_dataset("x,c,z\n1,A,2\n".as_bytes(), &schema_abc(), None).unwrap_err();
        assert!(err.to_string().contains("schema mismatch"), "{err}");
        let err = read_dataset("x\n1\n".as_bytes(), &schema_abc(), None).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)));
    }

    #[test]
    fn parse_errors() {
        let err = read_dataset("x,c\nabc,A\n".as_bytes(), &schema_abc(), None).unwrap_err();
        assert!(matches!(err, Error::NonNumeric { row: 0, .. }));
        let err = read_dataset("x,c\n1,Q\n".as_bytes(), &schema_abc(), None).unwrap_err();
        assert!(matches!(err, Error::UnknownLevel { .. }));
    }

    #[test]
    fn label_column_is_split_off() {
        let schema = FeatureSchema::new(vec![FeatureSpec::numeric("a")]).unwrap();
        let ds = read_dataset("y,a\n1,0.5\n0,0.25\n".as_bytes(), &schema, Some("y")).unwrap();
        assert_eq!(ds.n_cols(), 1);
        assert_eq!(ds.labels(), Some(&[1u8, 0][..]));
        assert!(read_dataset("y,a\n2,0.5\n".as_bytes(), &schema, Some("y")).is_err());
    }

    #[test]
    fn ordinal_with_levels_round_trips() {
        let schema = FeatureSchema::new(vec![FeatureSpec {
            name: "stage".into(),
            kind: FeatureKind::Ordinal,
            levels: Some(vec!["I".into(), "II".into(), "III".into()]),
        }])
        .unwrap();
        let ds = read_dataset("stage\nII\nIII\n\n".as_bytes(), &schema, None);
        // a blank line is skipped by the csv reader, so only two rows
        let ds = ds.unwrap();
        assert_eq!(ds.values().column(0).to_vec(), vec![1.0, 2.0]);
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf, None).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "stage\nII\nIII\n");
    }

    #[test]
    fn write_then_read_is_identity() {
        let csv = "x,c\n0.1,C\n,A\n3.25,\n";
        let ds = read_dataset(csv.as_bytes(), &schema_abc(), None).unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf, None).unwrap();
        let back = read_dataset(buf.as_slice(), &schema_abc(), None).unwrap();
        assert_eq!(format!("{:?}", ds.values()), format!("{:?}", back.values()));
    }
}
