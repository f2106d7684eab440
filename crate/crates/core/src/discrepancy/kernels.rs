//! Exact two-sample kernels on 1-D empirical distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sample contains a non-finite value"));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// 2-Wasserstein distance between the empirical distributions of `a` and `b`.
///
/// Integrates `(F_a^-1(t) - F_b^-1(t))^2` over `t in [0, 1]` exactly: both
/// quantile functions are step functions, so the integral is a sum over the
/// merged breakpoints `i/n` and `j/m`. Breakpoints are compared in integer
/// units of `1/(n*m)`. Returns the unsquared distance.
pub fn wasserstein2_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    Ok(wasserstein2_sorted(&a, &b))
}

pub(crate) fn wasserstein2_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as u64, b.len() as u64);
    if n == m {
        let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        return (ss / n as f64).sqrt();
    }
    let total = (n * m) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0u64;
    let mut cost = 0.0;
    while pos < n * m {
        let next_a = (i as u64 + 1) * m;
        let next_b = (j as u64 + 1) * n;
        let next = next_a.min(next_b);
        let diff = a[i] - b[j];
        cost += (next - pos) as f64 * diff * diff;
        pos = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    (cost / total).sqrt()
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|` with
/// right-continuous ECDFs, evaluated after all ties at each pooled value.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    Ok(ks_sorted(&a, &b))
}

pub(crate) fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0u64;
    while i < n || j < m {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < n && a[i] == x {
            i += 1;
        }
        while j < m && b[j] == x {
            j += 1;
        }
        let gap = (i as u64 * m as u64).abs_diff(j as u64 * n as u64);
        best = best.max(gap);
    }
    best as f64 / (n as f64 * m as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlConfig {
    pub bins: usize,
    pub epsilon: f64,
}

impl Default for KlConfig {
    fn default() -> Self {
        Self {
            bins: 50,
            epsilon: 1e-10,
        }
    }
}

/// Histogram estimate of `KL(P_a || P_b)` in nats.
///
/// Both samples are binned into `bins` equal-width bins spanning the pooled
/// range; `epsilon` is added to every bin probability before renormalizing.
/// A degenerate pooled range gives 0.
pub fn kl_divergence(a: &[f64], b: &[f64], cfg: KlConfig) -> Result<f64> {
    if cfg.bins < 2 {
        return Err(Error::invalid("KL needs at least two bins"));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::invalid("KL smoothing epsilon must be positive"));
    }
    let a = sorted(a)?;
    let b = sorted(b)?;
    Ok(kl_sorted(&a, &b, cfg))
}

pub(crate) fn kl_sorted(a: &[f64], b: &[f64], cfg: KlConfig) -> f64 {
    let lo = a[0].min(b[0]);
    let hi = a[a.len() - 1].max(b[b.len() - 1]);
    if hi <= lo {
        return 0.0;
    }
    let width = (hi - lo) / cfg.bins as f64;
    let histogram = |s: &[f64]| {
        let mut counts = vec![0usize; cfg.bins];
        for &x in s {
            let k = (((x - lo) / width) as usize).min(cfg.bins - 1);
            counts[k] += 1;
        }
        let norm = 1.0 + cfg.bins as f64 * cfg.epsilon;
        counts
            .into_iter()
            .map(|c| (c as f64 / s.len() as f64 + cfg.epsilon) / norm)
            .collect::<Vec<f64>>()
    };
    let p = histogram(a);
    let q = histogram(b);
    let kl: f64 = p.iter().zip(&q).map(|(&pk, &qk)| pk * (pk / qk).ln()).sum();
    kl.max(0.0)
}
