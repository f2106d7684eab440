//! Mean and chained-equation imputers, repeated (multiple) imputation and
//! the external exchange format.
//!
//! Missing cells are NaN. Imputers learn from `train` and fill `target`;
//! observed cells are never touched.

mod external;
mod mean;
mod mice;

use serde::{Deserialize, Serialize};

pub use external::{
    check_completion, exchange_path, exchange_paths, load_external_imputation, write_imputation_set,
    OBSERVED_TOLERANCE,
};
pub use mean::impute_mean;
pub use mice::{impute_mice, MiceConfig};

use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputeMethod {
    Mean,
    Mice,
    External,
    /// Debug imputer that returns the ground truth.
    Identity,
}

impl ImputeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Mice => "mice",
            Self::External => "external",
            Self::Identity => "identity",
        }
    }
}

impl std::fmt::Display for ImputeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ImputeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "mice" => Ok(Self::Mice),
            "external" => Ok(Self::External),
            "identity" => Ok(Self::Identity),
            other => Err(Error::invalid(format!("unknown imputation method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputerConfig {
    pub method: ImputeMethod,
    #[serde(default)]
    pub mice: MiceConfig,
    pub repeats: usize,
    pub seed: u64,
}

impl ImputerConfig {
    pub fn new(method: ImputeMethod, seed: u64) -> Self {
        Self {
            method,
            mice: MiceConfig::default(),
            repeats: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::invalid("need at least one imputation repeat"));
        }
        self.mice.validate()
    }

    /// Seed of repeat `k`.
    pub fn repeat_seed(&self, k: usize) -> u64 {
        seed::derive_seed(self.seed, &format!("repeat/{k}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: ImputeMethod,
    pub repeat: usize,
    pub seed: Option<u64>,
    pub mice: Option<MiceConfig>,
    pub source: Option<String>,
}

/// `m` completions of the same incomplete data.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationSet {
    pub completions: Vec<Dataset>,
    pub provenance: Vec<Provenance>,
}

impl ImputationSet {
    pub fn len(&self) -> usize {
        self.completions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.completions.is_empty()
    }
}

/// Completed training and target rows from one imputer run.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub train: Dataset,
    pub target: Dataset,
}

pub(crate) fn check_pair(train: &Dataset, target: &Dataset) -> Result<()> {
    if train.columns() != target.columns() {
        return Err(Error::SchemaMismatch(
            "training and target data have different columns".into(),
        ));
    }
    Ok(())
}

/// One imputer run filling both the training rows and the target rows.
/// The identity method needs the ground truth of both.
pub fn impute_joint(
    method: ImputeMethod,
    mice: &MiceConfig,
    train: &Dataset,
    target: &Dataset,
    seed: u64,
    truth: Option<(&Dataset, &Dataset)>,
) -> Result<Completion> {
    check_pair(train, target)?;
    let out = match method {
        ImputeMethod::Mean => mean::mean_joint(train, target)?,
        ImputeMethod::Mice => mice::mice_joint(train, target, mice, seed)?,
        ImputeMethod::Identity => {
            let (t, g) = truth.ok_or_else(|| Error::invalid("identity imputation needs the ground truth"))?;
            Completion {
                train: train.with_values(t.values().clone())?,
                target: target.with_values(g.values().clone())?,
            }
        }
        ImputeMethod::External => {
            return Err(Error::invalid(
                "external imputations are loaded from files, not computed",
            ))
        }
    };
    debug_assert!(check_completion(train, &out.train).is_ok());
    debug_assert!(check_completion(target, &out.target).is_ok());
    Ok(out)
}

/// Run the configured imputer `repeats` times with per-repeat derived seeds.
pub fn impute_multiple(train: &Dataset, target: &Dataset, cfg: &ImputerConfig) -> Result<ImputationSet> {
    cfg.validate()?;
    let mut completions = Vec::with_capacity(cfg.repeats);
    let mut provenance = Vec::with_capacity(cfg.repeats);
    for k in 0..cfg.repeats {
        let seed = cfg.repeat_seed(k);
        let c = impute_joint(cfg.method, &cfg.mice, train, target, seed, None)?;
        completions.push(c.target);
        provenance.push(Provenance {
            method: cfg.method,
            repeat: k,
            seed: (cfg.method == ImputeMethod::Mice).then_some(seed),
            mice: (cfg.method == ImputeMethod::Mice).then_some(cfg.mice),
            source: None,
        });
    }
    Ok(ImputationSet {
        completions,
        provenance,
    })
}
