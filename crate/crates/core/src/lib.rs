//! Benchmarking imputation quality against downstream classifier performance.

pub mod datamodel;
pub mod discrepancy;
pub mod downstream;
pub mod error;
pub mod imputers;
pub mod missingness;
pub mod partition;
pub mod pipeline;
pub mod seed;
pub mod sliced;
pub mod synth;

pub use error::{Error, Result};
