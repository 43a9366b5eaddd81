use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a row budget is split across classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassStrategy {
    /// The same number of rows for every class.
    Equal,
    /// Rows in proportion to each class's abundance.
    Proportional,
}

/// Rows to draw per class, and whether a class must be drawn with
/// replacement because its quota exceeds its size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassQuota {
    pub per_class: Vec<usize>,
    pub with_replacement: Vec<bool>,
}

impl ClassQuota {
    pub fn total(&self) -> usize {
        self.per_class.iter().sum()
    }

    /// The quota with every flagged class clamped to its size. This is what
    /// methods without replacement (k-means, coreset) actually emit.
    pub fn clamped(&self, class_counts: &[usize]) -> ClassQuota {
        ClassQuota {
            per_class: self
                .per_class
                .iter()
                .zip(class_counts)
                .map(|(&q, &c)| q.min(c))
                .collect(),
            with_replacement: vec![false; self.per_class.len()],
        }
    }

    pub(crate) fn check(&self, class_counts: &[usize]) -> Result<()> {
        if self.per_class.len() != class_counts.len() || self.with_replacement.len() != class_counts.len() {
            return Err(Error::param(format!(
                "quota covers {} classes, data has {}",
                self.per_class.len(),
                class_counts.len()
            )));
        }
        for (c, (&q, &k)) in self.per_class.iter().zip(class_counts).enumerate() {
            if q > k && !self.with_replacement[c] {
                return Err(Error::param(format!(
                    "quota {q} for class {c} exceeds its {k} rows without replacement"
                )));
            }
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `budget` over integer `weights`.
/// Remainders are compared exactly; ties go to the lower index.
fn apportion(budget: usize, weights: &[usize]) -> Vec<usize> {
    let total: u128 = weights.iter().map(|&w| w as u128).sum();
    if total == 0 {
        return vec![0; weights.len()];
    }
    let b = budget as u128;
    let mut out: Vec<usize> = weights.iter().map(|&w| (b * w as u128 / total) as usize).collect();
    let rems: Vec<u128> = weights.iter().map(|&w| b * w as u128 % total).collect();
    let leftover = budget - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    for &c in order.iter().take(leftover) {
        out[c] += 1;
    }
    out
}

/// Splits `n_max` rows across classes.
///
/// Proportional quotas are capped at each class's size, with the surplus
/// re-apportioned over the remaining classes; when the whole dataset fits the
/// quota equals the class counts. Equal quotas give every class
/// `n_max / m` rows (remainder to lower class indices) and flag classes that
/// are too small for sampling with replacement.
pub fn compute_quota(class_counts: &[usize], n_max: usize, strategy: ClassStrategy) -> Result<ClassQuota> {
    let m = class_counts.len();
    if m == 0 {
        return Err(Error::param("no classes"));
    }
    if let Some(c) = class_counts.iter().position(|&k| k == 0) {
        return Err(Error::param(format!("class {c} has no rows")));
    }
    if n_max == 0 {
        return Err(Error::param("n_max must be at least 1"));
    }
    match strategy {
        ClassStrategy::Equal => {
            if n_max < m {
                return Err(Error::param(format!(
                    "equal strategy needs n_max >= number of classes ({n_max} < {m})"
                )));
            }
            let per_class = apportion(n_max, &vec![1; m]);
            let with_replacement = per_class.iter().zip(class_counts).map(|(&q, &k)| q > k).collect();
            Ok(ClassQuota {
                per_class,
                with_replacement,
            })
        }
        ClassStrategy::Proportional => {
            let n: usize = class_counts.iter().sum();
            if n <= n_max {
                return Ok(ClassQuota {
                    per_class: class_counts.to_vec(),
                    with_replacement: vec![false; m],
                });
            }
            let mut per_class = vec![0; m];
            let mut capped = vec![false; m];
            let mut budget = n_max;
            loop {
                let weights: Vec<usize> = (0..m).map(|c| if capped[c] { 0 } else { class_counts[c] }).collect();
                let alloc = apportion(budget, &weights);
                let over: Vec<usize> = (0..m).filter(|&c| !capped[c] && alloc[c] > class_counts[c]).collect();
                if over.is_empty() {
                    for c in (0..m).filter(|&c| !capped[c]) {
                        per_class[c] = alloc[c];
                    }
                    break;
                }
                for c in over {
                    capped[c] = true;
                    per_class[c] = class_counts[c];
                    budget -= class_counts[c];
                }
            }
            Ok(ClassQuota {
                per_class,
                with_replacement: vec![false; m],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_proportions() {
        let q = compute_quota(&[70, 30], 10, ClassStrategy::Proportional).unwrap();
        assert_eq!(q.per_class, vec![7, 3]);
        assert_eq!(q.with_replacement, vec![false, false]);
    }

    #[test]
    fn equal_remainder_goes_to_lowest_class() {
        let q = compute_quota(&[100, 100, 100], 10, ClassStrategy::Equal).unwrap();
        assert_eq!(q.per_class, vec![4, 3, 3]);
    }

    #[test]
    fn equal_flags_small_class_for_replacement() {
        let q = compute_quota(&[2, 100], 10, ClassStrategy::Equal).unwrap();
        assert_eq!(q.per_class, vec![5, 5]);
        assert_eq!(q.with_replacement, vec![true, false]);
        assert_eq!(q.clamped(&[2, 100]).per_class, vec![2, 5]);
    }

    #[test]
    fn proportional_under_budget_is_identity() {
        let q = compute_quota(&[3, 9, 1], 50, ClassStrategy::Proportional).unwrap();
        assert_eq!(q.per_class, vec![3, 9, 1]);
    }

    #[test]
    fn proportional_largest_remainder() {
        // ideal shares 3.33.., 3.33.., 3.33.. -> ties resolved to class 0
        let q = compute_quota(&[10, 10, 10], 10, ClassStrategy::Proportional).unwrap();
        assert_eq!(q.per_class, vec![4, 3, 3]);
        // ideal 6.5, 3.5 -> tie -> class 0
        let q = compute_quota(&[13, 7], 10, ClassStrategy::Proportional).unwrap();
        assert_eq!(q.per_class, vec![7, 3]);
    }

    #[test]
    fn equal_with_too_small_budget_fails() {
        assert!(compute_quota(&[5, 5, 5], 2, ClassStrategy::Equal).is_err());
    }

    proptest! {
        #[test]
        fn quota_invariants(
            counts in prop::collection::vec(1usize..300, 2..8),
            n_max in 1usize..1000,
            equal in any::<bool>(),
        ) {
            let strategy = if equal { ClassStrategy::Equal } else { ClassStrategy::Proportional };
            match compute_quota(&counts, n_max, strategy) {
                Err(_) => prop_assert!(equal && n_max < counts.len()),
                Ok(q) => {
                    prop_assert!(q.total() <= n_max);
                    let n: usize = counts.iter().sum();
                    prop_assert_eq!(q.total(), n_max.min(if equal { n_max } else { n }));
                    for c in 0..counts.len() {
                        prop_assert!(q.with_replacement[c] || q.per_class[c] <= counts[c]);
                        prop_assert_eq!(q.with_replacement[c], q.per_class[c] > counts[c]);
                    }
                    if equal {
                        let mx = *q.per_class.iter().max().unwrap();
                        let mn = *q.per_class.iter().min().unwrap();
                        prop_assert!(mx - mn <= 1);
                    }
                }
            }
        }
    }
}
