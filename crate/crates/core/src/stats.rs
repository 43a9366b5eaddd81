//! Paired significance testing: Wilcoxon signed-rank and Holm's step-down
//! correction.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of nonzero differences handled by the exact null
/// distribution; above it the normal approximation is used.
pub const EXACT_THRESHOLD: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

impl WilcoxonMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            WilcoxonMethod::Exact => "exact",
            WilcoxonMethod::NormalApprox => "normal_approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences.
    pub w_statistic: f64,
    pub n_effective: usize,
    /// Two-sided.
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Ranks of `values` (1-based), with tied values sharing their midrank.
/// Returned doubled so every rank is an integer.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; doubled midrank = (i+1)+(j+1)
        let r2 = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

/// Wilcoxon signed-rank test on paired samples `a` and `b`.
///
/// Zero differences are dropped and tied magnitudes get midranks. With at
/// most [`EXACT_THRESHOLD`] nonzero differences the two-sided p-value is the
/// exact probability, over all `2^n` equally likely sign assignments of the
/// observed ranks, of a statistic at least as far from its mean
/// `n(n+1)/4` as the observed one. The distribution is counted by dynamic
/// programming over the (doubled, hence integral) rank sums. Larger samples
/// use the normal approximation with tie-corrected variance and a 0.5
/// continuity correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_with_threshold(a, b, EXACT_THRESHOLD)
}

pub fn wilcoxon_with_threshold(a: &[f64], b: &[f64], exact_threshold: usize) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::data(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::data("Wilcoxon test needs at least one pair"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in paired samples"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&d| d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            w_statistic: 0.0,
            n_effective: 0,
            p_value: 1.0,
            method: WilcoxonMethod::Exact,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_midranks(&abs);
    let t_obs: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, &r)| r).sum();
    let w = t_obs as f64 / 2.0;

    if n <= exact_threshold {
        let total = (n * (n + 1)) as u64; // sum of all doubled ranks
        let mut counts = vec![0u64; total as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let mean2 = total as i64; // twice the doubled mean, i.e. 2 * n(n+1)/2
        let obs_dev = (2 * t_obs as i64 - mean2).abs();
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|(s, _)| (2 * *s as i64 - mean2).abs() >= obs_dev)
            .map(|(_, &c)| c)
            .sum();
        let p = extreme as f64 / (1u64 << n) as f64;
        return Ok(WilcoxonResult {
            w_statistic: w,
            n_effective: n,
            p_value: p.min(1.0),
            method: WilcoxonMethod::Exact,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2);
    Ok(WilcoxonResult {
        w_statistic: w,
        n_effective: n,
        p_value: p.min(1.0),
        method: WilcoxonMethod::NormalApprox,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmReport {
    pub raw_p: Vec<f64>,
    pub adjusted_p: Vec<f64>,
    pub reject: Vec<bool>,
    pub alpha: f64,
}

/// Holm-Bonferroni step-down procedure.
///
/// With p-values sorted ascending, the i-th (1-based) of m is rejected while
/// `p_(i) <= alpha / (m - i + 1)`; the first failure stops the procedure.
/// Adjusted p-values are the running maximum of `(m - i + 1) p_(i)`, capped
/// at 1, reported in input order.
pub fn holm_bonferroni(raw_p: &[f64], alpha: f64) -> Result<HolmReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if let Some(p) = raw_p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::param(format!("p-value {p} outside [0, 1]")));
    }
    let m = raw_p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw_p[a].total_cmp(&raw_p[b]).then(a.cmp(&b)));
    let mut adjusted_p = vec![0.0; m];
    let mut reject = vec![false; m];
    let mut running = 0.0f64;
    let mut stopped = false;
    for (i, &idx) in order.iter().enumerate() {
        let factor = (m - i) as f64;
        running = running.max((factor * raw_p[idx]).min(1.0));
        adjusted_p[idx] = running;
        if !stopped && raw_p[idx] <= alpha / factor {
            reject[idx] = true;
        } else {
            stopped = true;
        }
    }
    Ok(HolmReport {
        raw_p: raw_p.to_vec(),
        adjusted_p,
        reject,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exact two-sided p by walking every sign pattern.
    fn enumerate_p(diffs: &[f64]) -> f64 {
        let nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
        let n = nz.len();
        if n == 0 {
            return 1.0;
        }
        let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
        let ranks: Vec<f64> = abs
            .iter()
            .map(|&v| {
                let below = abs.iter().filter(|&&u| u < v).count() as f64;
                let same = abs.iter().filter(|&&u| u == v).count() as f64;
                below + (same + 1.0) / 2.0
            })
            .collect();
        let mu = (n * (n + 1)) as f64 / 4.0;
        let w_obs: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            if (w - mu).abs() >= (w_obs - mu).abs() - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn identical_samples_give_p_one() {
        let r = wilcoxon_signed_rank(&[0.8, 0.9, 0.7], &[0.8, 0.9, 0.7]).unwrap();
        assert_eq!((r.p_value, r.n_effective), (1.0, 0));
    }

    #[test]
    fn three_positive_differences() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.w_statistic, 6.0);
        assert_eq!(r.p_value, 0.25);
        assert_eq!(r.method, WilcoxonMethod::Exact);
    }

    #[test]
    fn mixed_signs_match_enumeration() {
        let d = [0.3, -1.2, 2.5, 0.7, -0.1, 1.9, 3.3, -2.2, 0.9, 1.4];
        let zeros = [0.0; 10];
        let r = wilcoxon_signed_rank(&d, &zeros).unwrap();
        assert!((r.p_value - enumerate_p(&d)).abs() < 1e-15);
    }

    #[test]
    fn ten_folds_all_better() {
        let a = [0.9; 10];
        let b = [0.8; 10];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.p_value, 2.0 / 1024.0);
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() + 0.3).collect();
        let b = vec![0.0; 40];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
        // exact and approximate p should be close at n = 40
        let exact = wilcoxon_with_threshold(&a, &b, 40).unwrap();
        assert_eq!(exact.method, WilcoxonMethod::Exact);
        assert!((r.p_value - exact.p_value).abs() < 0.01, "{} vs {}", r.p_value, exact.p_value);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
        assert!(wilcoxon_signed_rank(&[], &[]).is_err());
    }

    #[test]
    fn holm_step_down_example() {
        let h = holm_bonferroni(&[0.01, 0.04, 0.03], 0.05).unwrap();
        assert_eq!(h.reject, vec![true, false, false]);
        let want = [0.03, 0.06, 0.06];
        for (a, b) in h.adjusted_p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn holm_single_and_degenerate() {
        let h = holm_bonferroni(&[0.04], 0.05).unwrap();
        assert_eq!((h.reject[0], h.adjusted_p[0]), (true, 0.04));
        let h = holm_bonferroni(&[1.0, 1.0, 1.0], 0.05).unwrap();
        assert_eq!(h.reject, vec![false; 3]);
        assert_eq!(h.adjusted_p, vec![1.0; 3]);
        assert!(holm_bonferroni(&[0.5], 1.0).is_err());
        assert!(holm_bonferroni(&[1.5], 0.05).is_err());
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(diffs in prop::collection::vec(-4i32..=4, 1..12)) {
            let d: Vec<f64> = diffs.iter().map(|&v| v as f64 * 0.5).collect();
            let zeros = vec![0.0; d.len()];
            let r = wilcoxon_signed_rank(&d, &zeros).unwrap();
            prop_assert!((r.p_value - enumerate_p(&d)).abs() < 1e-12);
            let swapped = wilcoxon_signed_rank(&zeros, &d).unwrap();
            prop_assert_eq!(r.p_value, swapped.p_value);
            let n = r.n_effective as f64;
            prop_assert!((swapped.w_statistic - (n * (n + 1.0) / 2.0 - r.w_statistic)).abs() < 1e-12);
            prop_assert!(r.w_statistic >= 0.0 && r.w_statistic <= n * (n + 1.0) / 2.0);
        }

        #[test]
        fn holm_properties(ps in prop::collection::vec(0.0f64..=1.0, 1..12), extra in 0.0f64..=1.0) {
            let alpha = 0.05;
            let h = holm_bonferroni(&ps, alpha).unwrap();
            for i in 0..ps.len() {
                prop_assert!(h.adjusted_p[i] >= ps[i] && h.adjusted_p[i] <= 1.0);
                prop_assert!(!h.reject[i] || ps[i] <= alpha);
                prop_assert!(!h.reject[i] || h.adjusted_p[i] <= alpha + 1e-12);
            }
            let mut order: Vec<usize> = (0..ps.len()).collect();
            order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]));
            prop_assert!(order.windows(2).all(|w| h.adjusted_p[w[0]] <= h.adjusted_p[w[1]]));
            // one more comparison can only remove rejections among the originals
            let mut more = ps.clone();
            more.push(extra);
            let h2 = holm_bonferroni(&more, alpha).unwrap();
            for i in 0..ps.len() {
                prop_assert!(!h2.reject[i] || h.reject[i]);
            }
        }
    }
}
