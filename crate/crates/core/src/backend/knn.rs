use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::sketch::kmeans::sq_dist;

/// Majority vote of the `k` nearest context rows (Euclidean).
///
/// Distance ties go to the lower context row, vote ties to the lower class.
/// `k` larger than the context is clamped to the context size.
pub fn predict_knn(
    context_x: ArrayView2<'_, f64>,
    context_y: &[usize],
    num_classes: usize,
    test_x: ArrayView2<'_, f64>,
    k: usize,
) -> Result<Vec<usize>> {
    let n = context_x.nrows();
    if n == 0 {
        return Err(Error::data("k-NN needs a non-empty context"));
    }
    if k == 0 {
        return Err(Error::param("k-NN needs k >= 1"));
    }
    if context_y.len() != n {
        return Err(Error::data("context rows and labels differ in length"));
    }
    if context_x.ncols() != test_x.ncols() {
        return Err(Error::data(format!(
            "context has {} columns, test rows have {}",
            context_x.ncols(),
            test_x.ncols()
        )));
    }
    if let Some(&bad) = context_y.iter().find(|&&c| c >= num_classes) {
        return Err(Error::data(format!("context label {bad} out of range")));
    }
    let k = k.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut dist = vec![0.0f64; n];
    let mut votes = vec![0usize; num_classes];
    let mut out = Vec::with_capacity(test_x.nrows());
    for t in test_x.rows() {
        for (i, c) in context_x.rows().into_iter().enumerate() {
            dist[i] = sq_dist(t, c);
        }
        let by_dist = |a: &usize, b: &usize| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b));
        if k < n {
            order.select_nth_unstable_by(k - 1, by_dist);
        }
        votes.iter_mut().for_each(|v| *v = 0);
        for &i in &order[..k] {
            votes[context_y[i]] += 1;
        }
        let winner = (0..num_classes).fold(0, |b, c| if votes[c] > votes[b] { c } else { b });
        out.push(winner);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    #[test]
    fn exact_match_wins_with_k1() {
        let cx = array![[0.0, 0.0], [5.0, 5.0], [9.0, 1.0]];
        let pred = predict_knn(cx.view(), &[0, 1, 2], 3, array![[5.0, 5.0]].view(), 1).unwrap();
        assert_eq!(pred, vec![1]);
    }

    #[test]
    fn nearest_by_inspection() {
        let cx = array![[0.0], [10.0]];
        let pred = predict_knn(cx.view(), &[0, 1], 2, array![[1.0]].view(), 1).unwrap();
        assert_eq!(pred, vec![0]);
    }

    #[test]
    fn distance_tie_goes_to_lower_row_and_vote_tie_to_lower_class() {
        let cx = array![[-1.0], [1.0]];
        assert_eq!(predict_knn(cx.view(), &[1, 0], 2, array![[0.0]].view(), 1).unwrap(), vec![1]);
        assert_eq!(predict_knn(cx.view(), &[1, 0], 2, array![[0.0]].view(), 2).unwrap(), vec![0]);
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let mut rng = crate::rng::rng_from_seed(8);
        let cx = Array2::from_shape_fn((30, 2), |_| rng.gen_range(0.0..10.0));
        let cy: Vec<usize> = (0..30).map(|_| rng.gen_range(0..3)).collect();
        let tx = Array2::from_shape_fn((50, 2), |_| rng.gen_range(0.0..10.0));
        let pred = predict_knn(cx.view(), &cy, 3, tx.view(), 3).unwrap();
        for (t, &p) in tx.rows().into_iter().zip(&pred) {
            let mut all: Vec<(f64, usize)> = cx
                .rows()
                .into_iter()
                .enumerate()
                .map(|(i, c)| (((t[0] - c[0]).powi(2) + (t[1] - c[1]).powi(2)).sqrt(), i))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut votes = [0; 3];
            for &(_, i) in &all[..3] {
                votes[cy[i]] += 1;
            }
            let best = *votes.iter().max().unwrap();
            assert_eq!(p, votes.iter().position(|&v| v == best).unwrap());
        }
    }

    #[test]
    fn order_invariant_with_distinct_distances() {
        let cx = array![[0.0], [1.5], [4.0], [7.25], [11.0]];
        let cy = [0, 1, 1, 0, 2];
        let tx = array![[0.3], [2.9], [6.0], [9.9]];
        let a = predict_knn(cx.view(), &cy, 3, tx.view(), 3).unwrap();
        let perm = [4, 2, 0, 3, 1];
        let px = cx.select(ndarray::Axis(0), &perm);
        let py: Vec<usize> = perm.iter().map(|&i| cy[i]).collect();
        assert_eq!(a, predict_knn(px.view(), &py, 3, tx.view(), 3).unwrap());
    }

    #[test]
    fn empty_context_is_an_error() {
        let cx = Array2::<f64>::zeros((0, 2));
        assert!(predict_knn(cx.view(), &[], 2, array![[0.0, 0.0]].view(), 1).is_err());
    }
}
