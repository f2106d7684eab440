//! Datasets, feature schemas, masks, normalization and post-processing of
//! imputed values.

mod csvio;
mod dataset;
mod normalize;
mod postprocess;
mod schema;

pub use csvio::{
    all_numeric, infer_numeric_schema, load_dataset, load_dataset_with_schema, read_dataset, read_mask, write_dataset,
    write_dataset_to, write_mask,
};
pub(crate) use csvio::format_number;
pub use dataset::{Dataset, Mask};
pub use normalize::Normalizer;
pub use postprocess::postprocess_imputed;
pub use schema::{decode_level, encode_level, Column, ColumnKind, FeatureKind, FeatureSchema, FeatureSpec};
