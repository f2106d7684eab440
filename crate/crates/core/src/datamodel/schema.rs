use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Binary,
    Ordinal,
    Categorical,
}

/// One raw (pre-encoding) feature as declared in the schema file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
            levels: None,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical,
            levels: Some(levels.iter().map(|s| s.to_string()).collect()),
        }
    }

    fn level_index(&self, value: &str) -> Option<usize> {
        self.levels
            .as_ref()
            .and_then(|levels| levels.iter().position(|l| l == value))
    }
}

/// Ordered list of raw features. Serialized as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSchema {
    entries: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(entries: Vec<FeatureSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature name `{}`", e.name)));
            }
            match (e.kind, &e.levels) {
                (FeatureKind::Categorical, Some(levels)) if levels.len() >= 2 => {}
                (FeatureKind::Categorical, _) => {
                    return Err(Error::InvalidSchema(format!(
                        "categorical feature `{}` needs at least two levels",
                        e.name
                    )))
                }
                (FeatureKind::Numeric | FeatureKind::Binary, Some(_)) => {
                    return Err(Error::InvalidSchema(format!(
                        "feature `{}` is {:?} and cannot declare levels",
                        e.name, e.kind
                    )))
                }
                (FeatureKind::Ordinal, Some(levels)) if levels.is_empty() => {
                    return Err(Error::InvalidSchema(format!(
                        "ordinal feature `{}` declares an empty level list",
                        e.name
                    )))
                }
                _ => {}
            }
            if let Some(levels) = &e.levels {
                let distinct: HashSet<_> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(Error::InvalidSchema(format!(
                        "feature `{}` has duplicate levels",
                        e.name
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// All-numeric schema with names `x0, x1, ...`.
    pub fn numeric(d: usize) -> Self {
        Self {
            entries: (0..d).map(|j| FeatureSpec::numeric(format!("x{j}"))).collect(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<FeatureSpec> = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::new(entries)
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("schema serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn entries(&self) -> &[FeatureSpec] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Encoded columns for this schema. Ordinal features without declared
    /// levels need an observed range, supplied by `ordinal_range`.
    pub(crate) fn encode_columns(
        &self,
        mut ordinal_range: impl FnMut(usize) -> (f64, f64),
    ) -> Vec<Column> {
        let mut cols = Vec::new();
        for (feature, e) in self.entries.iter().enumerate() {
            match e.kind {
                FeatureKind::Numeric => cols.push(Column {
                    name: e.name.clone(),
                    feature,
                    kind: ColumnKind::Numeric,
                }),
                FeatureKind::Binary => cols.push(Column {
                    name: e.name.clone(),
                    feature,
                    kind: ColumnKind::Binary,
                }),
                FeatureKind::Ordinal => {
                    let (min, max) = match &e.levels {
                        Some(levels) => (0.0, (levels.len() - 1) as f64),
                        None => ordinal_range(feature),
                    };
                    cols.push(Column {
                        name: e.name.clone(),
                        feature,
                        kind: ColumnKind::Ordinal { min, max },
                    })
                }
                FeatureKind::Categorical => {
                    let levels = e.levels.as_ref().expect("validated");
                    for (level, name) in levels.iter().enumerate() {
                        cols.push(Column {
                            name: format!("{}={}", e.name, name),
                            feature,
                            kind: ColumnKind::OneHot { level },
                        });
                    }
                }
            }
        }
        cols
    }
}

/// Encode one raw categorical cell as its one-hot block.
pub fn encode_level(spec: &FeatureSpec, value: &str) -> Option<Vec<f64>> {
    let k = spec.levels.as_ref()?.len();
    let idx = spec.level_index(value)?;
    let mut out = vec![0.0; k];
    out[idx] = 1.0;
    Some(out)
}

/// Inverse of [`encode_level`]: the level with the largest indicator
/// (lowest index on ties), or `None` for a missing block.
pub fn decode_level<'a>(spec: &'a FeatureSpec, block: &[f64]) -> Option<&'a str> {
    let levels = spec.levels.as_ref()?;
    let idx = argmax_lowest(block)?;
    levels.get(idx).map(String::as_str)
}

pub(crate) fn ordinal_level_index(spec: &FeatureSpec, value: &str) -> Option<usize> {
    spec.level_index(value)
}

/// Index of the largest non-NaN entry, lowest index on ties.
pub(crate) fn argmax_lowest(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// An encoded column. `feature` is the group id: one-hot siblings share it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub feature: usize,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ColumnKind {
    Numeric,
    Binary,
    Ordinal { min: f64, max: f64 },
    OneHot { level: usize },
}
