//! The summarization function: `(X, y) -> (X_compact, y_compact)` under a row
//! budget `n_max` and a column budget `d_max`.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::class_counts;
use crate::error::{Error, Result};
use crate::featsel::{self, FeatSelMethod, FeatSelParams, FeatureTransform};
use crate::rng::derive_seed;
use crate::sketch::{self, compute_quota, ClassStrategy, KMeansConfig, SketchMethod};

/// Whether the feature transform is fitted on the whole training fold before
/// sketching (default) or on the sketched rows afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOrder {
    #[default]
    FeaturesFirst,
    SketchFirst,
}

/// One concrete summarization: methods, budgets and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryPlan {
    pub sketch: SketchMethod,
    pub featsel: FeatSelMethod,
    pub strategy: ClassStrategy,
    pub n_max: usize,
    pub d_max: usize,
    pub seed: u64,
    #[serde(default)]
    pub featsel_params: FeatSelParams,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub fit_order: FitOrder,
}

impl SummaryPlan {
    pub fn new(
        sketch: SketchMethod,
        featsel: FeatSelMethod,
        strategy: ClassStrategy,
        n_max: usize,
        d_max: usize,
        seed: u64,
    ) -> Self {
        SummaryPlan {
            sketch,
            featsel,
            strategy,
            n_max,
            d_max,
            seed,
            featsel_params: FeatSelParams::default(),
            kmeans: KMeansConfig::default(),
            fit_order: FitOrder::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.d_max == 0 {
            return Err(Error::param("n_max and d_max must be at least 1"));
        }
        if self.featsel_params.bins < 2 {
            return Err(Error::param("mutual information needs at least 2 bins"));
        }
        Ok(())
    }

    /// `"RND / MUT / PR"` style label.
    pub fn combo_label(&self) -> String {
        format!(
            "{} / {} / {}",
            self.sketch.abbrev(),
            self.featsel.abbrev(),
            self.strategy.abbrev()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub plan: SummaryPlan,
    pub dataset_id: String,
    pub fold: Option<usize>,
}

/// The summarized context plus the transform test rows must go through.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactContext {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub num_classes: usize,
    pub transform: FeatureTransform,
    pub provenance: Provenance,
}

fn sub_seed(plan: &SummaryPlan, dataset_id: &str, fold: Option<usize>, tag: &str) -> u64 {
    let fold = fold.map_or(u64::MAX, |f| f as u64);
    derive_seed(plan.seed, &[dataset_id.into(), fold.into(), tag.into()])
}

/// Summarizes a training slice according to `plan`.
///
/// With the default [`FitOrder::FeaturesFirst`] the feature transform is fitted
/// on all of `(x, y)`, the rows are mapped into the reduced space, and the
/// sketch runs there. Seeds for each step are derived from
/// `(plan.seed, dataset_id, fold, step)`.
pub fn summarize(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    num_classes: usize,
    plan: &SummaryPlan,
    dataset_id: &str,
    fold: Option<usize>,
) -> Result<CompactContext> {
    plan.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::data(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    let counts = class_counts(y, num_classes)?;
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(Error::data(format!("class {c} missing from the training rows")));
    }
    let quota = compute_quota(&counts, plan.n_max, plan.strategy)?;
    let feat_seed = sub_seed(plan, dataset_id, fold, "featsel");
    let sketch_seed = sub_seed(plan, dataset_id, fold, "sketch");

    let (x_compact, y_compact, transform) = match plan.fit_order {
        FitOrder::FeaturesFirst => {
            let transform = featsel::fit(plan.featsel, x, y, plan.d_max, &plan.featsel_params, feat_seed)?;
            let reduced = transform.apply(x)?;
            let out = sketch::sketch(plan.sketch, reduced.view(), y, num_classes, &quota, sketch_seed, &plan.kmeans)?;
            (out.x, out.y, transform)
        }
        FitOrder::SketchFirst => {
            let out = sketch::sketch(plan.sketch, x, y, num_classes, &quota, sketch_seed, &plan.kmeans)?;
            let transform = featsel::fit(
                plan.featsel,
                out.x.view(),
                &out.y,
                plan.d_max,
                &plan.featsel_params,
                feat_seed,
            )?;
            (transform.apply(out.x.view())?, out.y, transform)
        }
    };
    debug_assert!(x_compact.nrows() <= plan.n_max && x_compact.ncols() <= plan.d_max);

    Ok(CompactContext {
        x: x_compact,
        y: y_compact,
        num_classes,
        transform,
        provenance: Provenance {
            plan: plan.clone(),
            dataset_id: dataset_id.to_string(),
            fold,
        },
    })
}

impl CompactContext {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    /// Maps test rows (in the original columns) into the context's space.
    pub fn transform_test(&self, test_rows: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.transform.apply(test_rows)
    }

    /// Writes the context as CSV: reduced feature columns, then the label
    /// column with the original class names restored.
    pub fn write_csv(
        &self,
        path: &Path,
        input_feature_names: &[String],
        class_names: &[String],
        label_column: &str,
    ) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = self.transform.output_names(input_feature_names);
        header.push(label_column.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for (row, &label) in self.x.rows().into_iter().zip(&self.y) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(class_names[label].clone());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the transform sidecar as pretty-printed JSON.
    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, &self.transform)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::SyntheticSpec;
    use ndarray::Axis;

    fn small(seed: u64) -> crate::dataset::Dataset {
        SyntheticSpec {
            id: "small".into(),
            class_counts: vec![40, 25, 15],
            informative: 4,
            noise: 6,
            separation: 2.0,
            seed,
        }
        .generate()
        .unwrap()
    }

    #[test]
    fn under_budget_random_plan_is_identity() {
        let ds = small(1);
        let plan = SummaryPlan::new(
            SketchMethod::Random,
            FeatSelMethod::Random,
            ClassStrategy::Proportional,
            1000,
            50,
            3,
        );
        let ctx = summarize(ds.features(), ds.labels(), 3, &plan, ds.id(), Some(0)).unwrap();
        assert!(ctx.transform.is_identity());
        let mut got: Vec<Vec<u64>> = ctx.x.rows().into_iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
        let mut want: Vec<Vec<u64>> = ds.features().rows().into_iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn seeds_change_content_not_shape() {
        let ds = small(2);
        let mut plan = SummaryPlan::new(SketchMethod::Random, FeatSelMethod::Random, ClassStrategy::Equal, 30, 4, 1);
        let a = summarize(ds.features(), ds.labels(), 3, &plan, ds.id(), Some(1)).unwrap();
        plan.seed = 2;
        let b = summarize(ds.features(), ds.labels(), 3, &plan, ds.id(), Some(1)).unwrap();
        assert_eq!(a.x.dim(), b.x.dim());
        assert_ne!(a.x, b.x);
    }

    #[test]
    fn subset_transform_selects_original_test_columns() {
        let ds = small(3);
        let plan = SummaryPlan::new(SketchMethod::Coreset, FeatSelMethod::MutualInfo, ClassStrategy::Equal, 30, 3, 1);
        let ctx = summarize(ds.features(), ds.labels(), 3, &plan, ds.id(), None).unwrap();
        let FeatureTransform::ColumnSubset { columns, .. } = &ctx.transform else {
            panic!("mutual information yields a column subset");
        };
        let test = ds.features().slice(ndarray::s![0..5, ..]).to_owned();
        let z = ctx.transform_test(test.view()).unwrap();
        assert_eq!(z, test.select(Axis(1), columns));
    }

    #[test]
    fn pca_plan_transforms_test_rows() {
        let ds = small(4);
        let plan = SummaryPlan::new(SketchMethod::Kmeans, FeatSelMethod::Pca, ClassStrategy::Proportional, 20, 3, 1);
        let ctx = summarize(ds.features(), ds.labels(), 3, &plan, ds.id(), None).unwrap();
        assert!(ctx.n_rows() <= 20);
        let z = ctx.transform_test(ds.features()).unwrap();
        assert_eq!(z.ncols(), 3);
        assert!(z.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sketch_first_order_respects_budgets() {
        let ds = small(5);
        let mut plan = SummaryPlan::new(SketchMethod::Random, FeatSelMethod::Pca, ClassStrategy::Equal, 24, 2, 1);
        plan.fit_order = FitOrder::SketchFirst;
        let ctx = summarize(ds.features(), ds.labels(), 3, &plan, ds.id(), None).unwrap();
        assert_eq!(ctx.x.dim(), (24, 2));
        assert_eq!(ctx.class_counts(), vec![8, 8, 8]);
    }

    #[test]
    fn missing_class_rejected() {
        let ds = small(6);
        let plan = SummaryPlan::new(SketchMethod::Random, FeatSelMethod::Random, ClassStrategy::Equal, 24, 2, 1);
        assert!(summarize(ds.features(), ds.labels(), 4, &plan, ds.id(), None).is_err());
    }

    #[test]
    fn writes_csv_with_label_names() {
        let ds = small(7);
        let plan = SummaryPlan::new(SketchMethod::Random, FeatSelMethod::Random, ClassStrategy::Equal, 6, 2, 1);
        let ctx = summarize(ds.features(), ds.labels(), 3, &plan, ds.id(), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        ctx.write_csv(&path, ds.feature_names(), &names, "target").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].ends_with(",target"));
        assert!(lines[1..].iter().all(|l| l.ends_with(",a") || l.ends_with(",b") || l.ends_with(",c")));
    }
}
