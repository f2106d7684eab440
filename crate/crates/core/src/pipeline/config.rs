use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::downstream::{LrPolicy, Pooling, DEFAULT_MAX_ITER_CANDIDATES, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::imputers::{ImputeMethod, MiceConfig};
use crate::partition::DEFAULT_PARTITIONS;
use crate::synth::Labeling;

/// Full benchmark configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream of the run is derived from it.
    pub seed: u64,
    pub data: DataConfig,
    #[serde(default)]
    pub missingness: MissingnessConfig,
    #[serde(default)]
    pub imputation: ImputationConfig,
    #[serde(default)]
    pub sliced: SlicedConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub outliers: OutlierConfig,
    /// Where the CLI writes the report files. Not echoed in the report.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses every core. Not echoed in the report.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

/// Either a synthetic generator or a CSV file (with optional schema).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthData {
    pub n_samples: usize,
    pub n_features: usize,
    #[serde(default = "one")]
    pub class_sep: f64,
    #[serde(default)]
    pub labeling: Labeling,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissingnessConfig {
    pub train_rates: Vec<f64>,
    pub test_rates: Vec<f64>,
    pub per_column: bool,
}

impl Default for MissingnessConfig {
    fn default() -> Self {
        Self {
            train_rates: vec![0.25, 0.5],
            test_rates: vec![0.25, 0.5],
            per_column: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputationConfig {
    pub methods: Vec<ImputeMethod>,
    pub repeats: usize,
    pub mice: MiceConfig,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        Self {
            methods: vec![ImputeMethod::Mean, ImputeMethod::Mice],
            repeats: 5,
            mice: MiceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlicedConfig {
    /// Number of directions; `max(d, 50)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    pub partitions: usize,
    /// Histogram bins for every KL estimate (class B and class C).
    pub kl_bins: usize,
}

impl Default for SlicedConfig {
    fn default() -> Self {
        Self {
            directions: None,
            partitions: DEFAULT_PARTITIONS,
            kl_bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub candidates: Vec<usize>,
    pub pooling: Pooling,
    pub threshold: f64,
    pub policy: LrPolicy,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            candidates: DEFAULT_MAX_ITER_CANDIDATES.to_vec(),
            pooling: Pooling::Mean,
            threshold: DEFAULT_THRESHOLD,
            policy: LrPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierConfig {
    /// Absolute distance thresholds.
    pub thresholds: Vec<f64>,
    /// Thresholds placed at these quantiles of the observed distances.
    pub quantiles: Vec<f64>,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![1.5e-8, 1e-7],
            quantiles: vec![0.5, 0.9, 0.99],
        }
    }
}

impl RunConfig {
    /// A synthetic-data run with every other setting at its default.
    pub fn synthetic(n_samples: usize, n_features: usize, seed: u64) -> Self {
        Self {
            seed,
            data: DataConfig {
                synth: Some(SynthData {
                    n_samples,
                    n_features,
                    class_sep: 1.0,
                    labeling: Labeling::default(),
                }),
                path: None,
                schema: None,
                label: None,
            },
            missingness: MissingnessConfig::default(),
            imputation: ImputationConfig::default(),
            sliced: SlicedConfig::default(),
            classifier: ClassifierConfig::default(),
            outliers: OutlierConfig::default(),
            output: None,
            workers: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a TOML file; relative data and output paths resolve against the
    /// file's directory.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        resolve(&mut cfg.data.path);
        resolve(&mut cfg.data.schema);
        resolve(&mut cfg.output);
        cfg.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data.synth, &self.data.path) {
            (Some(s), None) => {
                if s.n_features == 0 || !(s.class_sep >= 0.0) {
                    return Err(Error::invalid("synthetic data needs n_features >= 1 and class_sep >= 0"));
                }
            }
            (None, Some(_)) => {
                if self.data.label.is_none() {
                    return Err(Error::invalid("file data needs a label column for the classifier"));
                }
            }
            _ => return Err(Error::invalid("data needs exactly one of `synth` or `path`")),
        }
        let m = &self.missingness;
        for rates in [&m.train_rates, &m.test_rates] {
            if rates.is_empty() || rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::invalid("missingness rates must be a non-empty list in [0, 1]"));
            }
        }
        let imp = &self.imputation;
        if imp.methods.is_empty() {
            return Err(Error::invalid("no imputation methods configured"));
        }
        if imp.methods.contains(&ImputeMethod::External) {
            return Err(Error::invalid(
                "external imputations cannot run inside a benchmark; evaluate them with `imputeval evaluate`",
            ));
        }
        let mut methods = imp.methods.clone();
        methods.sort();
        methods.dedup();
        if methods.len() != imp.methods.len() {
            return Err(Error::invalid("imputation methods are listed twice"));
        }
        if imp.repeats == 0 {
            return Err(Error::invalid("need at least one imputation repeat"));
        }
        imp.mice.validate()?;
        if self.sliced.partitions == 0 || self.sliced.kl_bins < 2 {
            return Err(Error::invalid("sliced needs partitions >= 1 and kl_bins >= 2"));
        }
        let c = &self.classifier;
        if c.candidates.is_empty() {
            return Err(Error::invalid("no classifier iteration candidates"));
        }
        if !(0.0..=1.0).contains(&c.threshold) {
            return Err(Error::invalid("classification threshold must lie in [0, 1]"));
        }
        c.policy.validate()?;
        if self.outliers.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::invalid("outlier quantiles must lie in [0, 1]"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml() {
        let cfg = RunConfig::from_toml_str(
            "seed = 3\n[data]\nsynth = { n_samples = 100, n_features = 5 }\n",
        )
        .unwrap();
        assert_eq!(cfg.missingness.train_rates, vec![0.25, 0.5]);
        assert_eq!(cfg.imputation.repeats, 5);
        assert_eq!(cfg.classifier.candidates, vec![50, 100, 150, 200, 250]);
        assert_eq!(cfg, RunConfig::synthetic(100, 5, 3));
    }

    #[test]
    fn full_toml() {
        let cfg = RunConfig::from_toml_str(
            r#"
seed = 1
workers = 2
[data]
synth = { n_samples = 60, n_features = 3, class_sep = 2.0, labeling = "parity" }
[missingness]
train_rates = [0.1]
test_rates = [0.2, 0.3]
[imputation]
methods = ["identity", "mean"]
repeats = 2
mice = { iterations = 3 }
[sliced]
directions = 8
partitions = 4
[classifier]
candidates = [10, 20]
pooling = "majority"
[outliers]
thresholds = [0.5]
"#,
        )
        .unwrap();
        assert_eq!(cfg.workers, Some(2));
        assert_eq!(cfg.imputation.mice.iterations, 3);
        assert_eq!(cfg.imputation.mice.donors, 5);
        assert_eq!(cfg.classifier.pooling, Pooling::Majority);
        assert_eq!(cfg.data.synth.unwrap().labeling, Labeling::Parity);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            "[data]\nsynth = { n_samples = 10, n_features = 2 }\n",
            "seed = 1\n[data]\n",
            "seed = 1\n[data]\npath = \"x.csv\"\n",
            "seed = 1\n[data]\nsynth = { n_samples = 10, n_features = 2 }\n[missingness]\ntrain_rates = [1.5]\n",
            "seed = 1\n[data]\nsynth = { n_samples = 10, n_features = 2 }\n[imputation]\nmethods = [\"external\"]\n",
            "seed = 1\n[data]\nsynth = { n_samples = 10, n_features = 2 }\n[imputation]\nmethods = [\"gain\"]\n",
            "seed = 1\nbogus = 2\n[data]\nsynth = { n_samples = 10, n_features = 2 }\n",
        ];
        for text in bad {
            assert!(RunConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn relative_paths_resolve_against_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 1\noutput = \"out\"\n[data]\npath = \"d.csv\"\nlabel = \"y\"\n").unwrap();
        let cfg = RunConfig::from_toml_file(&path).unwrap();
        assert_eq!(cfg.data.path.unwrap(), dir.path().join("d.csv"));
        assert_eq!(cfg.output.unwrap(), dir.path().join("out"));
    }
}
