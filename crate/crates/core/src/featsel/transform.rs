use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fitted linear map `(x - center) / scale * components`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub center: Array1<f64>,
    /// Per-column divisor applied after centering, when scaling was enabled.
    pub scale: Option<Array1<f64>>,
    /// `d x d_out`, orthonormal columns ordered by explained variance.
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
}

/// A fitted feature reduction, applied identically to context and test rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TransformFile", try_from = "TransformFile")]
pub enum FeatureTransform {
    ColumnSubset { original_d: usize, columns: Vec<usize> },
    LinearProjection(Projection),
}

impl FeatureTransform {
    pub fn identity(d: usize) -> Self {
        FeatureTransform::ColumnSubset {
            original_d: d,
            columns: (0..d).collect(),
        }
    }

    pub fn original_d(&self) -> usize {
        match self {
            FeatureTransform::ColumnSubset { original_d, .. } => *original_d,
            FeatureTransform::LinearProjection(p) => p.center.len(),
        }
    }

    pub fn d_out(&self) -> usize {
        match self {
            FeatureTransform::ColumnSubset { columns, .. } => columns.len(),
            FeatureTransform::LinearProjection(p) => p.components.ncols(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, FeatureTransform::ColumnSubset { original_d, columns }
            if columns.len() == *original_d && columns.iter().enumerate().all(|(i, &c)| i == c))
    }

    /// Maps `rows` (with the fitted column count) into the reduced space.
    pub fn apply(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.original_d() {
            return Err(Error::data(format!(
                "transform expects {} columns, got {}",
                self.original_d(),
                rows.ncols()
            )));
        }
        match self {
            FeatureTransform::ColumnSubset { columns, .. } => Ok(rows.select(Axis(1), columns)),
            FeatureTransform::LinearProjection(p) => {
                let mut centered = &rows - &p.center;
                if let Some(scale) = &p.scale {
                    centered /= scale;
                }
                Ok(centered.dot(&p.components))
            }
        }
    }

    /// Column names of the reduced space.
    pub fn output_names(&self, input_names: &[String]) -> Vec<String> {
        match self {
            FeatureTransform::ColumnSubset { columns, .. } => {
                columns.iter().map(|&c| input_names[c].clone()).collect()
            }
            FeatureTransform::LinearProjection(p) => (0..p.components.ncols()).map(|j| format!("pc{j}")).collect(),
        }
    }
}

/// On-disk sidecar layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TransformFile {
    ColumnSubset {
        original_d: usize,
        d_out: usize,
        columns: Vec<usize>,
    },
    LinearProjection {
        original_d: usize,
        d_out: usize,
        center: Vec<f64>,
        scale: Option<Vec<f64>>,
        /// `original_d` rows of `d_out` entries.
        projection: Vec<Vec<f64>>,
        explained_variance: Vec<f64>,
    },
}

impl From<FeatureTransform> for TransformFile {
    fn from(t: FeatureTransform) -> Self {
        match t {
            FeatureTransform::ColumnSubset { original_d, columns } => TransformFile::ColumnSubset {
                original_d,
                d_out: columns.len(),
                columns,
            },
            FeatureTransform::LinearProjection(p) => TransformFile::LinearProjection {
                original_d: p.center.len(),
                d_out: p.components.ncols(),
                center: p.center.to_vec(),
                scale: p.scale.map(|s| s.to_vec()),
                projection: p.components.rows().into_iter().map(|r| r.to_vec()).collect(),
                explained_variance: p.explained_variance,
            },
        }
    }
}

impl TryFrom<TransformFile> for FeatureTransform {
    type Error = String;

    fn try_from(f: TransformFile) -> std::result::Result<Self, String> {
        match f {
            TransformFile::ColumnSubset {
                original_d,
                d_out,
                columns,
            } => {
                if columns.len() != d_out {
                    return Err(format!("d_out {d_out} but {} columns", columns.len()));
                }
                if columns.windows(2).any(|w| w[0] >= w[1]) || columns.iter().any(|&c| c >= original_d) {
                    return Err("columns must be strictly increasing and below original_d".into());
                }
                Ok(FeatureTransform::ColumnSubset { original_d, columns })
            }
            TransformFile::LinearProjection {
                original_d,
                d_out,
                center,
                scale,
                projection,
                explained_variance,
            } => {
                if center.len() != original_d || projection.len() != original_d {
                    return Err("center/projection length must equal original_d".into());
                }
                if projection.iter().any(|r| r.len() != d_out) {
                    return Err("every projection row must have d_out entries".into());
                }
                if scale.as_ref().is_some_and(|s| s.len() != original_d) {
                    return Err("scale length must equal original_d".into());
                }
                let flat: Vec<f64> = projection.into_iter().flatten().collect();
                Ok(FeatureTransform::LinearProjection(Projection {
                    center: Array1::from(center),
                    scale: scale.map(Array1::from),
                    components: Array2::from_shape_vec((original_d, d_out), flat).map_err(|e| e.to_string())?,
                    explained_variance,
                }))
            }
        }
    }
}
