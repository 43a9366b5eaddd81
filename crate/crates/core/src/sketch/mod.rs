//! Row sketching: shrink the labelled context to a per-class quota.
//!
//! Every method works class by class. Each class draws from its own
//! generator, seeded from the caller's seed and the class index, so results
//! do not depend on the order classes are processed in.

mod coreset;
pub(crate) mod kmeans;
mod quota;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::class_counts;
use crate::error::{Error, Result};
use crate::rng::derived_rng;

pub use coreset::{covering_radius, farthest_first};
pub use kmeans::{kmeans, KMeansConfig};
pub use quota::{compute_quota, ClassQuota, ClassStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchMethod {
    Random,
    Kmeans,
    Coreset,
}

impl SketchMethod {
    pub const ALL: [SketchMethod; 3] = [SketchMethod::Random, SketchMethod::Kmeans, SketchMethod::Coreset];

    pub fn as_str(self) -> &'static str {
        match self {
            SketchMethod::Random => "random",
            SketchMethod::Kmeans => "kmeans",
            SketchMethod::Coreset => "coreset",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            SketchMethod::Random => "RND",
            SketchMethod::Kmeans => "KMN",
            SketchMethod::Coreset => "CST",
        }
    }
}

impl fmt::Display for SketchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SketchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SketchMethod::Random),
            "kmeans" => Ok(SketchMethod::Kmeans),
            "coreset" => Ok(SketchMethod::Coreset),
            other => Err(Error::param(format!("unknown sketch method `{other}`"))),
        }
    }
}

impl ClassStrategy {
    pub const ALL: [ClassStrategy; 2] = [ClassStrategy::Proportional, ClassStrategy::Equal];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassStrategy::Equal => "equal",
            ClassStrategy::Proportional => "proportional",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            ClassStrategy::Equal => "EQ",
            ClassStrategy::Proportional => "PR",
        }
    }
}

impl fmt::Display for ClassStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(ClassStrategy::Equal),
            "proportional" => Ok(ClassStrategy::Proportional),
            other => Err(Error::param(format!("unknown class strategy `{other}`"))),
        }
    }
}

/// Sketched rows. `source_rows` maps each output row to its input row, and
/// is `None` when rows are synthetic (k-means centers).
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOutput {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub source_rows: Option<Vec<usize>>,
}

fn rows_by_class(y: &[usize], num_classes: usize) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &c) in y.iter().enumerate() {
        by_class[c].push(i);
    }
    by_class
}

fn validate(x: ArrayView2<'_, f64>, y: &[usize], num_classes: usize, quota: &ClassQuota) -> Result<Vec<usize>> {
    if x.nrows() != y.len() {
        return Err(Error::data(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    let counts = class_counts(y, num_classes)?;
    quota.check(&counts)?;
    Ok(counts)
}

fn gather(x: ArrayView2<'_, f64>, y: &[usize], rows: Vec<usize>) -> SketchOutput {
    SketchOutput {
        x: x.select(Axis(0), &rows),
        y: rows.iter().map(|&r| y[r]).collect(),
        source_rows: Some(rows),
    }
}

/// Uniform per-class draw; with replacement only for flagged classes.
pub fn sketch_random(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    num_classes: usize,
    quota: &ClassQuota,
    seed: u64,
) -> Result<SketchOutput> {
    validate(x, y, num_classes, quota)?;
    let mut picked = Vec::with_capacity(quota.total());
    for (c, rows) in rows_by_class(y, num_classes).iter().enumerate() {
        let q = quota.per_class[c];
        if q == 0 {
            continue;
        }
        let mut rng = derived_rng(seed, &["class".into(), c.into()]);
        if quota.with_replacement[c] {
            picked.extend((0..q).map(|_| rows[rng.gen_range(0..rows.len())]));
        } else {
            picked.extend(index::sample(&mut rng, rows.len(), q).into_iter().map(|i| rows[i]));
        }
    }
    Ok(gather(x, y, picked))
}

/// Replaces each class by the centers of a k-means fit with `k = quota`.
/// Classes whose quota reaches their size are copied verbatim, once.
pub fn sketch_kmeans(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    num_classes: usize,
    quota: &ClassQuota,
    seed: u64,
    config: &KMeansConfig,
) -> Result<SketchOutput> {
    let counts = validate(x, y, num_classes, quota)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in sketch input"));
    }
    let quota = quota.clamped(&counts);
    let d = x.ncols();
    let mut out_x: Vec<f64> = Vec::with_capacity(quota.total() * d);
    let mut out_y = Vec::with_capacity(quota.total());
    for (c, rows) in rows_by_class(y, num_classes).iter().enumerate() {
        let q = quota.per_class[c];
        if q == 0 {
            continue;
        }
        let class_x = x.select(Axis(0), rows);
        let centers = if q >= rows.len() {
            class_x
        } else {
            let mut rng = derived_rng(seed, &["class".into(), c.into()]);
            kmeans(class_x.view(), q, &mut rng, config)?
        };
        out_x.extend(centers.iter());
        out_y.extend(std::iter::repeat_n(c, centers.nrows()));
    }
    let n = out_y.len();
    Ok(SketchOutput {
        x: Array2::from_shape_vec((n, d), out_x).expect("row-major center buffer"),
        y: out_y,
        source_rows: None,
    })
}

/// Greedy farthest-first k-center selection inside each class.
pub fn sketch_coreset(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    num_classes: usize,
    quota: &ClassQuota,
) -> Result<SketchOutput> {
    let counts = validate(x, y, num_classes, quota)?;
    let quota = quota.clamped(&counts);
    let mut picked = Vec::with_capacity(quota.total());
    for (c, rows) in rows_by_class(y, num_classes).iter().enumerate() {
        let q = quota.per_class[c];
        if q == 0 {
            continue;
        }
        let class_x = x.select(Axis(0), rows);
        picked.extend(farthest_first(class_x.view(), q).into_iter().map(|i| rows[i]));
    }
    Ok(gather(x, y, picked))
}

/// Dispatches to the sketch for `method`.
pub fn sketch(
    method: SketchMethod,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    num_classes: usize,
    quota: &ClassQuota,
    seed: u64,
    kmeans_config: &KMeansConfig,
) -> Result<SketchOutput> {
    match method {
        SketchMethod::Random => sketch_random(x, y, num_classes, quota, seed),
        SketchMethod::Kmeans => sketch_kmeans(x, y, num_classes, quota, seed, kmeans_config),
        SketchMethod::Coreset => sketch_coreset(x, y, num_classes, quota),
    }
}
