use ndarray::{ArrayView2, Axis};

use super::kmeans::sq_dist;

/// Greedy k-center (farthest-first traversal) on Euclidean distance.
///
/// Starts from the point farthest from the centroid; every later pick is the
/// point farthest from its nearest chosen point. Ties go to the lower row
/// index. Returns row indices in pick order. The covering radius is within a
/// factor 2 of the optimal k-center radius.
pub fn farthest_first(points: ArrayView2<'_, f64>, k: usize) -> Vec<usize> {
    let n = points.nrows();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let centroid = points.mean_axis(Axis(0)).expect("non-empty");
    let argmax = |d: &[f64]| (0..d.len()).fold(0, |b, i| if d[i] > d[b] { i } else { b });

    let to_centroid: Vec<f64> = points.rows().into_iter().map(|p| sq_dist(p, centroid.view())).collect();
    let first = argmax(&to_centroid);
    let mut picked = vec![first];
    let mut nearest: Vec<f64> = points.rows().into_iter().map(|p| sq_dist(p, points.row(first))).collect();
    let mut taken = vec![false; n];
    taken[first] = true;
    while picked.len() < k {
        // a picked point has distance 0; mask it so exact duplicates of all
        // remaining points still yield distinct rows
        let masked: Vec<f64> = nearest
            .iter()
            .zip(&taken)
            .map(|(&d, &t)| if t { f64::NEG_INFINITY } else { d })
            .collect();
        let next = argmax(&masked);
        picked.push(next);
        taken[next] = true;
        for (i, p) in points.rows().into_iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(p, points.row(next)));
        }
    }
    picked
}

/// Largest distance from any point to its nearest selected point.
pub fn covering_radius(points: ArrayView2<'_, f64>, selected: &[usize]) -> f64 {
    points
        .rows()
        .into_iter()
        .map(|p| {
            selected
                .iter()
                .map(|&s| sq_dist(p, points.row(s)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}
