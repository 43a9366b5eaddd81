//! Mutual information between a binned feature and the class label.

use ndarray::ArrayView2;

use super::transform::FeatureTransform;
use crate::error::{Error, Result};

/// Equal-frequency bin codes for one feature.
///
/// A feature with at most `bins` distinct values uses those values as bins.
/// Otherwise the cut points are the order statistics at positions
/// `floor(j * n / bins)` for `j = 1..bins`, with duplicates merged, and a
/// value's bin is the number of cut points `<=` it. Codes depend only on the
/// ordering of values, so any strictly increasing transform of the feature
/// yields the same bins.
pub fn quantile_bins(feature: &[f64], bins: usize) -> Vec<usize> {
    let mut sorted = feature.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let edges: Vec<f64> = if distinct.len() <= bins {
        distinct.into_iter().skip(1).collect()
    } else {
        let n = sorted.len();
        let mut e: Vec<f64> = (1..bins).map(|j| sorted[j * n / bins]).collect();
        e.dedup();
        e
    };
    feature.iter().map(|&v| edges.partition_point(|&e| e <= v)).collect()
}

/// `I(X;Y)` in nats between the quantile-binned feature and the labels.
///
/// Cell terms are summed in a canonical order (sorted by their count
/// triples) so that tables equal up to a relabelling give bit-identical
/// results.
pub fn mutual_information(feature: &[f64], labels: &[usize], bins: usize) -> f64 {
    assert_eq!(feature.len(), labels.len(), "feature/label length mismatch");
    let n = feature.len();
    if n == 0 {
        return 0.0;
    }
    let codes = quantile_bins(feature, bins);
    let n_bins = codes.iter().max().map_or(0, |&b| b + 1);
    let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut joint = vec![0u64; n_bins * n_classes];
    let mut row = vec![0u64; n_bins];
    let mut col = vec![0u64; n_classes];
    for (&b, &c) in codes.iter().zip(labels) {
        joint[b * n_classes + c] += 1;
        row[b] += 1;
        col[c] += 1;
    }
    let mut cells: Vec<(u64, u64, u64)> = Vec::new();
    for b in 0..n_bins {
        for c in 0..n_classes {
            let k = joint[b * n_classes + c];
            if k > 0 {
                cells.push((k, row[b], col[c]));
            }
        }
    }
    cells.sort_unstable();
    let nf = n as f64;
    let mi: f64 = cells
        .iter()
        .map(|&(k, rb, cc)| {
            let kf = k as f64;
            kf / nf * ((kf * nf) / (rb as f64 * cc as f64)).ln()
        })
        .sum();
    mi.max(0.0)
}

/// MI of every column against the labels.
pub fn mi_scores(x: ArrayView2<'_, f64>, labels: &[usize], bins: usize) -> Vec<f64> {
    x.columns()
        .into_iter()
        .map(|col| mutual_information(&col.to_vec(), labels, bins))
        .collect()
}

/// Scores closer than this are tied. Equal MI reached through different
/// contingency tables can differ in the last bits.
pub const MI_TIE_TOLERANCE: f64 = 1e-9;

/// Keeps the `d_max` columns with the highest MI, returned in ascending
/// column order. Each pick takes the lowest-index column whose score is
/// within [`MI_TIE_TOLERANCE`] of the best remaining score.
pub fn fit_mutual_info(x: ArrayView2<'_, f64>, labels: &[usize], d_max: usize, bins: usize) -> Result<FeatureTransform> {
    let (n, d) = x.dim();
    if bins < 2 {
        return Err(Error::param(format!("mutual information needs >= 2 bins, got {bins}")));
    }
    if d_max == 0 {
        return Err(Error::param("d_max must be at least 1"));
    }
    if labels.len() != n {
        return Err(Error::data(format!("{n} rows but {} labels", labels.len())));
    }
    if d <= d_max {
        return Ok(FeatureTransform::identity(d));
    }
    if n < 2 {
        return Err(Error::data("mutual information needs at least 2 rows"));
    }
    let scores = mi_scores(x, labels, bins);
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut columns = Vec::with_capacity(d_max);
    for _ in 0..d_max {
        let best = remaining.iter().map(|&j| scores[j]).fold(f64::NEG_INFINITY, f64::max);
        let pos = remaining
            .iter()
            .position(|&j| scores[j] >= best - MI_TIE_TOLERANCE)
            .expect("best is attained");
        columns.push(remaining.remove(pos));
    }
    columns.sort_unstable();
    Ok(FeatureTransform::ColumnSubset { original_d: d, columns })
}
