use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub max_iters: usize,
    /// Stop once no center moves more than `tol * (1 + largest center norm)`.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[inline]
pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn seed_centers<R: Rng>(points: ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    let first = rng.gen_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points.rows().into_iter().map(|p| sq_dist(p, points.row(first))).collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just past the final sum
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(j).assign(&points.row(pick));
        for (i, p) in points.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(pick)));
        }
    }
    centers
}

/// Lloyd's algorithm with k-means++ seeding. Returns the `k x d` centers.
///
/// Assignment ties go to the lower center index. An empty cluster is
/// reseeded at the point farthest from its assigned center.
pub fn kmeans<R: Rng>(
    points: ArrayView2<'_, f64>,
    k: usize,
    rng: &mut R,
    config: &KMeansConfig,
) -> Result<Array2<f64>> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::param(format!("k-means needs 1 <= k <= n, got k={k}, n={n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in k-means input"));
    }
    let d = points.ncols();
    let mut centers = seed_centers(points, k, rng);
    let mut assign = vec![0usize; n];
    let mut dist = vec![0.0f64; n];

    for _ in 0..config.max_iters {
        for (i, p) in points.rows().into_iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.rows().into_iter().enumerate() {
                let dd = sq_dist(p, c);
                if dd < best_d {
                    best_d = dd;
                    best = j;
                }
            }
            assign[i] = best;
            dist[i] = best_d;
        }

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut sizes = vec![0usize; k];
        for (i, p) in points.rows().into_iter().enumerate() {
            let mut row = sums.row_mut(assign[i]);
            row += &p;
            sizes[assign[i]] += 1;
        }
        let mut next = centers.clone();
        for (j, &size) in sizes.iter().enumerate() {
            if size > 0 {
                let mean = &sums.row(j) / size as f64;
                next.row_mut(j).assign(&mean);
            } else {
                let far = (0..n).fold(0, |b, i| if dist[i] > dist[b] { i } else { b });
                next.row_mut(j).assign(&points.row(far));
                dist[far] = 0.0;
            }
        }

        let shift = centers
            .rows()
            .into_iter()
            .zip(next.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        let scale = next
            .rows()
            .into_iter()
            .map(|c| c.dot(&c).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift <= config.tol * (1.0 + scale) {
            break;
        }
    }
    Ok(centers)
}
