//! Experiment grid: datasets x backends x plans x folds.

mod records;
mod report;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backend::{accuracy, predict, BackendSpec};
use crate::dataset::{stratified_folds, Dataset, FoldSplit};
use crate::error::{Error, Result};
use crate::featsel::{FeatSelMethod, FeatSelParams};
use crate::rng::derive_seed;
use crate::sketch::{ClassStrategy, KMeansConfig, SketchMethod};
use crate::summarize::{summarize, FitOrder, SummaryPlan};

pub use records::{read_results, write_results, EvalRecord, Outcome, RecordKey, ResultsWriter, RESULTS_HEADER};
pub use report::{
    best_combo, best_combo_where, budgets, compare_backends, normalize_levels, normalized_curves, table_rows,
    render_comparison_csv, render_curve_csv, render_table_csv, write_comparison_csv, write_curve_csv, write_table_csv,
    BestCombo, Budget, Combo, ComparisonReport, ComparisonRow, CurveAxis, CurvePoint, Pairing, TableCell, TableRow,
};

fn default_sketch() -> Vec<SketchMethod> {
    SketchMethod::ALL.to_vec()
}
fn default_featsel() -> Vec<FeatSelMethod> {
    FeatSelMethod::ALL.to_vec()
}
fn default_strategy() -> Vec<ClassStrategy> {
    ClassStrategy::ALL.to_vec()
}
fn default_n_max() -> Vec<usize> {
    vec![3000]
}
fn default_d_max() -> Vec<usize> {
    vec![100]
}
fn default_folds() -> usize {
    10
}

/// The axes of an experiment grid. Defaults reproduce the full
/// 3 x 3 x 2 grid at `n_max = 3000`, `d_max = 100` over 10 folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_sketch")]
    pub sketch: Vec<SketchMethod>,
    #[serde(default = "default_featsel")]
    pub featsel: Vec<FeatSelMethod>,
    #[serde(default = "default_strategy")]
    pub strategy: Vec<ClassStrategy>,
    #[serde(default = "default_n_max")]
    pub n_max: Vec<usize>,
    #[serde(default = "default_d_max")]
    pub d_max: Vec<usize>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub featsel_params: FeatSelParams,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub fit_order: FitOrder,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            sketch: default_sketch(),
            featsel: default_featsel(),
            strategy: default_strategy(),
            n_max: default_n_max(),
            d_max: default_d_max(),
            folds: default_folds(),
            seed: 0,
            featsel_params: FeatSelParams::default(),
            kmeans: KMeansConfig::default(),
            fit_order: FitOrder::default(),
        }
    }
}

fn check_axis<T: PartialEq + std::fmt::Debug>(name: &str, axis: &[T]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::param(format!("grid axis `{name}` is empty")));
    }
    for (i, v) in axis.iter().enumerate() {
        if axis[..i].contains(v) {
            return Err(Error::param(format!("grid axis `{name}` repeats {v:?}")));
        }
    }
    Ok(())
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        check_axis("sketch", &self.sketch)?;
        check_axis("featsel", &self.featsel)?;
        check_axis("strategy", &self.strategy)?;
        check_axis("n_max", &self.n_max)?;
        check_axis("d_max", &self.d_max)?;
        if self.folds < 2 {
            return Err(Error::param("need at least 2 folds"));
        }
        if self.n_max.contains(&0) || self.d_max.contains(&0) {
            return Err(Error::param("budgets must be at least 1"));
        }
        if self.featsel_params.bins < 2 {
            return Err(Error::param("mutual information needs at least 2 bins"));
        }
        Ok(())
    }

    /// Every plan of the grid, budgets outermost.
    pub fn plans(&self) -> Vec<SummaryPlan> {
        let mut out = Vec::new();
        for &n_max in &self.n_max {
            for &d_max in &self.d_max {
                for &sketch in &self.sketch {
                    for &featsel in &self.featsel {
                        for &strategy in &self.strategy {
                            let mut plan = SummaryPlan::new(sketch, featsel, strategy, n_max, d_max, self.seed);
                            plan.featsel_params = self.featsel_params;
                            plan.kmeans = self.kmeans;
                            plan.fit_order = self.fit_order;
                            out.push(plan);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Seed for a dataset's fold assignment.
pub fn fold_seed(master: u64, dataset_id: &str) -> u64 {
    derive_seed(master, &["folds".into(), dataset_id.into()])
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 means one per available processor.
    pub jobs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GridRun {
    /// Records written by this run, in file order.
    pub records: Vec<EvalRecord>,
    /// Evaluations skipped because the results file already had them.
    pub skipped: usize,
}

struct Job {
    dataset: usize,
    plan: usize,
    fold: usize,
    backends: Vec<usize>,
}

fn evaluate(ds: &Dataset, split: &FoldSplit, plan: &SummaryPlan, backends: &[&BackendSpec]) -> Vec<EvalRecord> {
    let start = Instant::now();
    let fail_all = |reason: String, elapsed: f64| {
        backends
            .iter()
            .map(|b| EvalRecord::new(ds.id(), b.id(), plan, split.fold_index, Outcome::Failed(reason.clone()), elapsed))
            .collect::<Vec<_>>()
    };
    let (train_x, train_y) = ds.take_rows(&split.train_rows);
    let (test_x, test_y) = ds.take_rows(&split.test_rows);
    let ctx = match summarize(train_x.view(), &train_y, ds.num_classes(), plan, ds.id(), Some(split.fold_index)) {
        Ok(ctx) => ctx,
        Err(e) => return fail_all(format!("summarize: {e}"), start.elapsed().as_secs_f64()),
    };
    let test_z = match ctx.transform_test(test_x.view()) {
        Ok(z) => z,
        Err(e) => return fail_all(format!("transform: {e}"), start.elapsed().as_secs_f64()),
    };
    let prep = start.elapsed().as_secs_f64();
    backends
        .iter()
        .map(|b| {
            let outcome = match predict(b, &ctx, test_z.view()).and_then(|p| {
                accuracy(&p.labels, &test_y).map(|a| (a, p.elapsed.as_secs_f64()))
            }) {
                Ok((a, secs)) => (Outcome::Accuracy(a), prep + secs),
                Err(e) => (Outcome::Failed(e.to_string()), start.elapsed().as_secs_f64()),
            };
            EvalRecord::new(ds.id(), b.id(), plan, split.fold_index, outcome.0, outcome.1)
        })
        .collect()
}

/// Runs the grid, appending to `results_path`.
///
/// Keys already present in the results file are skipped, so an interrupted
/// run resumes where it stopped. Cells run on a pool of worker threads, and
/// records are written in grid order by the calling thread regardless of
/// which worker finishes first. `progress` is called with `(done, total)`
/// after each cell.
pub fn run_grid(
    spec: &GridSpec,
    datasets: &[Dataset],
    backends: &[BackendSpec],
    results_path: &Path,
    options: &RunOptions,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<GridRun> {
    spec.validate()?;
    if backends.is_empty() {
        return Err(Error::param("no backends configured"));
    }
    for b in backends {
        b.validate()?;
    }
    check_unique_ids("dataset", datasets.iter().map(Dataset::id))?;
    check_unique_ids("backend", backends.iter().map(BackendSpec::id))?;

    let folds: Vec<Vec<FoldSplit>> = datasets
        .iter()
        .map(|ds| stratified_folds(ds, spec.folds, fold_seed(spec.seed, ds.id())))
        .collect::<Result<_>>()?;
    let plans = spec.plans();

    let done: HashSet<RecordKey> = if results_path.exists() {
        read_results(results_path)?.into_iter().map(|r| r.key).collect()
    } else {
        HashSet::new()
    };
    let mut writer = ResultsWriter::open(results_path)?;

    let mut jobs = Vec::new();
    let mut skipped = 0;
    for (di, ds) in datasets.iter().enumerate() {
        for (pi, plan) in plans.iter().enumerate() {
            for fi in 0..spec.folds {
                let pending: Vec<usize> = (0..backends.len())
                    .filter(|&bi| {
                        let key = EvalRecord::new(ds.id(), backends[bi].id(), plan, fi, Outcome::Accuracy(0.0), 0.0).key;
                        let seen = done.contains(&key);
                        skipped += usize::from(seen);
                        !seen
                    })
                    .collect();
                if !pending.is_empty() {
                    jobs.push(Job {
                        dataset: di,
                        plan: pi,
                        fold: fi,
                        backends: pending,
                    });
                }
            }
        }
    }

    let workers = match options.jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(jobs.len().max(1));
    let total = jobs.len();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Vec<EvalRecord>)>();
    let mut written = Vec::new();

    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, datasets, folds, plans) = (&jobs, &next, datasets, &folds, &plans);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let chosen: Vec<&BackendSpec> = job.backends.iter().map(|&b| &backends[b]).collect();
                let recs = evaluate(
                    &datasets[job.dataset],
                    &folds[job.dataset][job.fold],
                    &plans[job.plan],
                    &chosen,
                );
                if tx.send((i, recs)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, Vec<EvalRecord>> = BTreeMap::new();
        let mut cursor = 0;
        for (i, recs) in rx {
            pending.insert(i, recs);
            while let Some(recs) = pending.remove(&cursor) {
                writer.append(&recs)?;
                written.extend(recs);
                cursor += 1;
                progress(cursor, total);
            }
        }
        Ok(())
    })?;

    Ok(GridRun {
        records: written,
        skipped,
    })
}

fn check_unique_ids<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if id.is_empty() || id.contains(',') {
            return Err(Error::param(format!("invalid {what} id `{id}`")));
        }
        if !seen.insert(id) {
            return Err(Error::param(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_eighteen_plans() {
        assert_eq!(GridSpec::default().plans().len(), 18);
    }

    #[test]
    fn grid_json_defaults_and_unknown_keys() {
        let g: GridSpec = serde_json::from_str(r#"{"n_max":[100,500],"folds":5}"#).unwrap();
        assert_eq!(g.plans().len(), 36);
        assert_eq!(g.folds, 5);
        assert!(serde_json::from_str::<GridSpec>(r#"{"nmax":[100]}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_axes() {
        let mut g = GridSpec::default();
        g.sketch.clear();
        assert!(g.validate().is_err());
        let g = GridSpec {
            strategy: vec![ClassStrategy::Equal, ClassStrategy::Equal],
            ..GridSpec::default()
        };
        assert!(g.validate().is_err());
        let g = GridSpec {
            folds: 1,
            ..GridSpec::default()
        };
        assert!(g.validate().is_err());
    }
}
