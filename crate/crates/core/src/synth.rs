//! Synthetic classification data: isotropic unit Gaussian clusters centred
//! on the vertices of the hypercube `{-sep, +sep}^d`.
//!
//! Labels are a symmetric function of the vertex, so every feature carries the
//! same amount of signal. The default majority rule (more positive than
//! negative coordinates) is learnable by a linear model; the parity rule is
//! not, and no single feature is informative on its own under it.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labeling {
    /// 1 when more coordinates are positive than negative; an exact tie
    /// (even `d`) follows the sign of the first coordinate.
    #[default]
    Majority,
    /// Number of positive coordinates mod 2.
    Parity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_features: usize,
    #[serde(default = "default_sep")]
    pub class_sep: f64,
    #[serde(default)]
    pub labeling: Labeling,
    pub seed: u64,
}

fn default_sep() -> f64 {
    1.0
}

impl SynthConfig {
    pub fn new(n_samples: usize, n_features: usize, seed: u64) -> Self {
        Self {
            n_samples,
            n_features,
            class_sep: default_sep(),
            labeling: Labeling::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::invalid("n_features must be at least 1"));
        }
        if !(self.class_sep >= 0.0 && self.class_sep.is_finite()) {
            return Err(Error::invalid("class_sep must be finite and non-negative"));
        }
        Ok(())
    }
}

pub fn generate_classification(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (n, d) = (cfg.n_samples, cfg.n_features);
    let mut rng = seed::rng(cfg.seed);
    let mut values = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut positives = 0usize;
        let mut first_positive = false;
        for j in 0..d {
            let positive: bool = rng.random();
            positives += usize::from(positive);
            if j == 0 {
                first_positive = positive;
            }
            let centre = if positive { cfg.class_sep } else { -cfg.class_sep };
            let noise: f64 = rng.sample(StandardNormal);
            values[[i, j]] = centre + noise;
        }
        let label = match cfg.labeling {
            Labeling::Parity => positives % 2 == 1,
            Labeling::Majority => {
                2 * positives > d || (2 * positives == d && first_positive)
            }
        };
        labels.push(u8::from(label));
    }
    Dataset::numeric(values, Some(labels))
}
