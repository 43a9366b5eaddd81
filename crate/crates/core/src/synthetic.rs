//! Seeded synthetic classification tables.
//!
//! Each class gets a random mean vector on the informative columns; rows are
//! that mean plus unit Gaussian noise. Noise columns are standard Gaussian and
//! independent of the label. Row order is shuffled.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::derived_rng;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub id: String,
    pub class_counts: Vec<usize>,
    pub informative: usize,
    pub noise: usize,
    /// Class means are drawn uniformly from `[-separation, separation]`.
    pub separation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<Dataset> {
        let m = self.class_counts.len();
        let d = self.informative + self.noise;
        if m < 2 || d == 0 {
            return Err(Error::param("synthetic data needs >= 2 classes and >= 1 column"));
        }
        let mut rng = derived_rng(self.seed, &["synthetic".into(), self.id.as_str().into()]);
        let means: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                (0..self.informative)
                    .map(|_| rng.gen_range(-self.separation..=self.separation))
                    .collect()
            })
            .collect();
        let mut labels: Vec<usize> = self
            .class_counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c, k))
            .collect();
        labels.shuffle(&mut rng);
        let n = labels.len();
        let mut x = Array2::<f64>::zeros((n, d));
        for (i, &y) in labels.iter().enumerate() {
            for j in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                x[[i, j]] = if j < self.informative { means[y][j] + z } else { z };
            }
        }
        let names = (0..d)
            .map(|j| {
                if j < self.informative {
                    format!("inf{j}")
                } else {
                    format!("noise{}", j - self.informative)
                }
            })
            .collect();
        Dataset::new(self.id.clone(), x, labels, m, names)
    }
}

/// Two classes of 1000 rows, 20 informative and 100 noise columns.
pub fn binary_balanced(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        id: "synth_binary".into(),
        class_counts: vec![1000, 1000],
        informative: 20,
        noise: 100,
        separation: 1.0,
        seed,
    }
}

/// Ten classes of 200 rows, 20 informative and 100 noise columns.
pub fn ten_class_balanced(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        id: "synth_tenclass".into(),
        class_counts: vec![200; 10],
        informative: 20,
        noise: 100,
        separation: 1.5,
        seed,
    }
}

/// A 95/5 split over 2000 rows, 20 informative and 100 noise columns.
pub fn imbalanced_95_5(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        id: "synth_imbalanced".into(),
        class_counts: vec![1900, 100],
        informative: 20,
        noise: 100,
        separation: 1.0,
        seed,
    }
}

/// Four balanced classes with 20 informative and 80 pure-noise columns.
pub fn informative_plus_noise(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        id: "synth_spurious".into(),
        class_counts: vec![400; 4],
        informative: 20,
        noise: 80,
        separation: 1.0,
        seed,
    }
}
