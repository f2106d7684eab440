//! Sample-wise (class A) and feature-wise (class B) imputation discrepancies.

mod kernels;
mod stats;

pub use kernels::{kl_divergence, ks_statistic, wasserstein2_1d, KlConfig};
pub(crate) use kernels::{kl_sorted, ks_sorted, wasserstein2_sorted};
pub use stats::{
    feature_stats, sample_stats, FeatureDiscrepancy, FeatureStats, FeatureSummary, SampleStats,
    Summary,
};
pub(crate) use stats::quantile_sorted;
