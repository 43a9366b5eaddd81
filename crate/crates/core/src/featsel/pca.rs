use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::transform::{FeatureTransform, Projection};
use crate::error::{Error, Result};

/// Principal components of the centered (and optionally unit-variance
/// scaled) rows, via a thin SVD of the data matrix.
///
/// Keeps `min(n_components, d, numerical rank)` components, at least one.
/// Components are sorted by decreasing singular value and signed so that each
/// one's largest-magnitude entry (first on ties) is positive. Explained
/// variances are `sigma^2 / (n - 1)`.
pub fn principal_components(x: ArrayView2<'_, f64>, n_components: usize, scale: bool) -> Result<Projection> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::data("PCA needs at least 2 rows"));
    }
    if n_components == 0 {
        return Err(Error::param("PCA needs at least one component"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in PCA input"));
    }
    let center = x.mean_axis(Axis(0)).expect("n >= 2");
    let mut centered = &x - &center;
    let scale = if scale {
        let std = centered.map_axis(Axis(0), |c| {
            let s = (c.dot(&c) / (n - 1) as f64).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        });
        centered /= &std;
        Some(std)
    } else {
        None
    };

    let m = DMatrix::from_fn(n, d, |i, j| centered[[i, j]]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = svd.singular_values;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let sigma_max = order.first().map_or(0.0, |&i| sigma[i]);
    let tol = sigma_max * n.max(d) as f64 * f64::EPSILON;
    let rank = order.iter().filter(|&&i| sigma[i] > tol).count();
    let k = n_components.min(d).min(n - 1).min(rank).max(1);

    let mut components = Array2::<f64>::zeros((d, k));
    let mut explained_variance = Vec::with_capacity(k);
    for (out, &i) in order.iter().take(k).enumerate() {
        let row = v_t.row(i);
        let lead = (0..d).fold(0, |b, j| if row[j].abs() > row[b].abs() { j } else { b });
        let sign = if row[lead] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[[j, out]] = sign * row[j];
        }
        explained_variance.push(sigma[i] * sigma[i] / (n - 1) as f64);
    }
    Ok(Projection {
        center: Array1::from(center.to_vec()),
        scale,
        components,
        explained_variance,
    })
}

/// PCA down to `d_max` components, or the identity subset when `d <= d_max`.
pub fn fit_pca(x: ArrayView2<'_, f64>, d_max: usize, scale: bool) -> Result<FeatureTransform> {
    if d_max == 0 {
        return Err(Error::param("d_max must be at least 1"));
    }
    if x.ncols() <= d_max {
        return Ok(FeatureTransform::identity(x.ncols()));
    }
    principal_components(x, d_max, scale).map(FeatureTransform::LinearProjection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn points_on_a_line_keep_distances() {
        let x = array![[0.0, 0.0], [1.0, 2.0], [3.0, 6.0], [-2.0, -4.0]];
        let t = fit_pca(x.view(), 1, false).unwrap();
        let z = t.apply(x.view()).unwrap();
        assert_eq!(z.ncols(), 1);
        for i in 0..4 {
            for j in 0..4 {
                let orig = (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt();
                assert!((orig - (z[[i, 0]] - z[[j, 0]]).abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn under_budget_is_identity() {
        let x = array![[1.0, 2.0], [3.0, 5.0], [0.0, 1.0]];
        assert!(fit_pca(x.view(), 2, false).unwrap().is_identity());
    }

    #[test]
    fn rank_deficient_input_keeps_rank_components() {
        // three points span a plane inside R^4
        let x = array![[1.0, 0.0, 2.0, 1.0], [0.0, 1.0, 1.0, 0.0], [2.0, 1.0, 0.0, 3.0]];
        let p = principal_components(x.view(), 3, false).unwrap();
        assert_eq!(p.components.ncols(), 2);
    }

    #[test]
    fn sign_convention_makes_leading_entry_positive() {
        let x = array![[2.0, -1.0, 0.5], [-3.0, 1.5, 0.0], [1.0, 0.2, -0.7], [0.0, -0.7, 0.2]];
        let p = principal_components(x.view(), 2, false).unwrap();
        for col in p.components.columns() {
            let lead = col.iter().copied().fold(0.0f64, |b, v| if v.abs() > b.abs() { v } else { b });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn applied_to_fit_rows_is_centered() {
        let x = Array2::from_shape_fn((20, 6), |(i, j)| ((i * 31 + j * 17) % 11) as f64 + 0.1 * j as f64);
        let t = fit_pca(x.view(), 3, false).unwrap();
        let z = t.apply(x.view()).unwrap();
        for m in z.mean_axis(Axis(0)).unwrap() {
            assert!(m.abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_divides_by_column_std() {
        let x = array![[0.0, 0.0, 1.0], [10.0, 1.0, 1.0], [20.0, 0.0, 1.0], [30.0, 1.0, 1.0]];
        let p = principal_components(x.view(), 2, true).unwrap();
        let s = p.scale.unwrap();
        assert!((s[0] - 12.909944487358056).abs() < 1e-12);
        assert_eq!(s[2], 1.0);
    }

    #[test]
    fn non_finite_rejected() {
        let x = array![[0.0, 1.0, 2.0], [f64::INFINITY, 0.0, 1.0]];
        assert!(fit_pca(x.view(), 1, false).is_err());
    }
}
