//! Context summarization for in-context tabular classification.
//!
//! A summarization maps a labelled training table to a compact context of at
//! most `n_max` rows and `d_max` columns. Rows are reduced by a sketch
//! ([`sketch`]) under a per-class quota, columns by a feature transform
//! ([`featsel`]); [`summarize::summarize`] composes the two. The [`bench`]
//! module runs grids of plans over cross-validation folds and aggregates the
//! results, with significance testing from [`stats`].

pub mod backend;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod featsel;
pub mod rng;
pub mod sketch;
pub mod stats;
pub mod summarize;
pub mod synthetic;

pub use backend::BackendSpec;
pub use dataset::{Dataset, MissingPolicy};
pub use error::{Error, Result};
pub use featsel::{FeatSelMethod, FeatureTransform};
pub use sketch::{ClassStrategy, SketchMethod};
pub use summarize::{summarize, CompactContext, FitOrder, SummaryPlan};
