//! Feature reduction to at most `d_max` columns.
//!
//! Every method returns the identity subset when the input already has
//! `d <= d_max` columns.

mod mi;
mod pca;
mod transform;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub use mi::{fit_mutual_info, mi_scores, mutual_information, quantile_bins, MI_TIE_TOLERANCE};
pub use pca::{fit_pca, principal_components};
pub use transform::{FeatureTransform, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatSelMethod {
    Random,
    MutualInfo,
    Pca,
}

impl FeatSelMethod {
    pub const ALL: [FeatSelMethod; 3] = [FeatSelMethod::Random, FeatSelMethod::MutualInfo, FeatSelMethod::Pca];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatSelMethod::Random => "random",
            FeatSelMethod::MutualInfo => "mutual_info",
            FeatSelMethod::Pca => "pca",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            FeatSelMethod::Random => "RND",
            FeatSelMethod::MutualInfo => "MUT",
            FeatSelMethod::Pca => "PCA",
        }
    }
}

impl fmt::Display for FeatSelMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatSelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(FeatSelMethod::Random),
            "mutual_info" | "mutual-info" => Ok(FeatSelMethod::MutualInfo),
            "pca" => Ok(FeatSelMethod::Pca),
            other => Err(Error::param(format!("unknown feature method `{other}`"))),
        }
    }
}

/// Knobs shared by the feature methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatSelParams {
    /// Quantile bins for mutual information.
    pub bins: usize,
    /// Scale columns to unit variance before PCA.
    pub pca_scale: bool,
}

impl Default for FeatSelParams {
    fn default() -> Self {
        FeatSelParams {
            bins: 16,
            pca_scale: false,
        }
    }
}

/// A uniform draw of `d_max` distinct columns, sorted.
pub fn fit_random(d: usize, d_max: usize, seed: u64) -> Result<FeatureTransform> {
    if d == 0 || d_max == 0 {
        return Err(Error::param("d and d_max must be at least 1"));
    }
    if d <= d_max {
        return Ok(FeatureTransform::identity(d));
    }
    let mut columns = index::sample(&mut rng_from_seed(seed), d, d_max).into_vec();
    columns.sort_unstable();
    Ok(FeatureTransform::ColumnSubset { original_d: d, columns })
}

/// Fits the reduction for `method` on `(x, labels)`.
pub fn fit(
    method: FeatSelMethod,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    d_max: usize,
    params: &FeatSelParams,
    seed: u64,
) -> Result<FeatureTransform> {
    match method {
        FeatSelMethod::Random => fit_random(x.ncols(), d_max, seed),
        FeatSelMethod::MutualInfo => fit_mutual_info(x, labels, d_max, params.bins),
        FeatSelMethod::Pca => fit_pca(x, d_max, params.pca_scale),
    }
}
