//! Aggregation of results into best-combination tables, normalized scaling
//! curves and paired backend comparisons.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::records::{EvalRecord, Outcome};
use crate::error::{Error, Result};
use crate::featsel::FeatSelMethod;
use crate::sketch::{ClassStrategy, SketchMethod};
use crate::stats::{holm_bonferroni, wilcoxon_signed_rank, HolmReport, WilcoxonResult};

/// A `(sketch, featsel, strategy)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Combo {
    pub sketch: SketchMethod,
    pub featsel: FeatSelMethod,
    pub strategy: ClassStrategy,
}

impl Combo {
    pub fn new(sketch: SketchMethod, featsel: FeatSelMethod, strategy: ClassStrategy) -> Self {
        Combo {
            sketch,
            featsel,
            strategy,
        }
    }

    fn of(r: &EvalRecord) -> Self {
        Combo::new(r.key.sketch, r.key.featsel, r.key.strategy)
    }

    /// `"RND / RND / PR"` style label.
    pub fn label(&self) -> String {
        format!(
            "{} / {} / {}",
            self.sketch.abbrev(),
            self.featsel.abbrev(),
            self.strategy.abbrev()
        )
    }

    /// Position in the tie-break order; smaller is preferred.
    fn preference(&self) -> (usize, usize, usize) {
        let pos = |found: Option<usize>| found.unwrap_or(usize::MAX);
        (
            pos(SketchMethod::ALL.iter().position(|&s| s == self.sketch)),
            pos(FeatSelMethod::ALL.iter().position(|&f| f == self.featsel)),
            pos(ClassStrategy::ALL.iter().position(|&s| s == self.strategy)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Budget {
    pub n_max: usize,
    pub d_max: usize,
}

impl Budget {
    fn of(r: &EvalRecord) -> Self {
        Budget {
            n_max: r.key.n_max,
            d_max: r.key.d_max,
        }
    }
}

/// Distinct budgets present in `records`, ascending.
pub fn budgets(records: &[EvalRecord]) -> Vec<Budget> {
    records.iter().map(Budget::of).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Winning combination for one dataset and backend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestCombo {
    pub dataset_id: String,
    pub backend_id: String,
    pub budget: Budget,
    pub combo: Combo,
    pub mean: f64,
    /// `((seed, fold), accuracy)`, ordered by seed then fold.
    pub fold_accuracies: Vec<((u64, usize), f64)>,
    /// Combinations that had no failed records and were ranked.
    pub candidates: usize,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn single_budget(records: &[&EvalRecord], what: &str) -> Result<Budget> {
    let found: BTreeSet<Budget> = records.iter().map(|r| Budget::of(r)).collect();
    match found.len() {
        0 => Err(Error::data(format!("no records for {what}"))),
        1 => Ok(*found.first().unwrap()),
        _ => Err(Error::data(format!(
            "records for {what} span {} budgets; pick one with n_max and d_max",
            found.len()
        ))),
    }
}

/// Best combination for `dataset_id` and `backend_id`; the records must
/// all share one budget.
pub fn best_combo(records: &[EvalRecord], dataset_id: &str, backend_id: &str) -> Result<BestCombo> {
    best_combo_where(records, dataset_id, backend_id, None)
}

/// Like [`best_combo`], restricted to `budget` when one is given.
///
/// Combinations are ranked by mean accuracy over their folds. A combination
/// with any failed fold is not ranked. Exact ties go to the simplest plan:
/// random before the other methods on both method axes, proportional before
/// equal.
pub fn best_combo_where(
    records: &[EvalRecord],
    dataset_id: &str,
    backend_id: &str,
    budget: Option<Budget>,
) -> Result<BestCombo> {
    let what = format!("dataset `{dataset_id}`, backend `{backend_id}`");
    let slice: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| r.key.dataset_id == dataset_id && r.key.backend_id == backend_id)
        .filter(|r| budget.is_none_or(|b| Budget::of(r) == b))
        .collect();
    let budget = single_budget(&slice, &what)?;

    let mut groups: BTreeMap<Combo, BTreeMap<(u64, usize), Option<f64>>> = BTreeMap::new();
    for r in &slice {
        groups
            .entry(Combo::of(r))
            .or_default()
            .insert((r.key.seed, r.key.fold), r.accuracy());
    }

    type Ranked = (Combo, f64, Vec<((u64, usize), f64)>);
    let mut best: Option<Ranked> = None;
    let mut candidates = 0;
    for (combo, folds) in groups {
        let Some(accs) = folds
            .iter()
            .map(|(&k, a)| a.map(|a| (k, a)))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        candidates += 1;
        let m = mean(&accs.iter().map(|(_, a)| *a).collect::<Vec<_>>());
        let better = match &best {
            None => true,
            Some((bc, bm, _)) => m > *bm || (m == *bm && combo.preference() < bc.preference()),
        };
        if better {
            best = Some((combo, m, accs));
        }
    }
    let (combo, mean, fold_accuracies) =
        best.ok_or_else(|| Error::data(format!("no combination without failures for {what}")))?;
    Ok(BestCombo {
        dataset_id: dataset_id.to_string(),
        backend_id: backend_id.to_string(),
        budget,
        combo,
        mean,
        fold_accuracies,
        candidates,
    })
}

fn ids(records: &[EvalRecord], backend: bool) -> Vec<String> {
    records
        .iter()
        .map(|r| if backend { &r.key.backend_id } else { &r.key.dataset_id })
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// One backend's entries in a table row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    pub backend_id: String,
    /// Best over every combination.
    pub best: Option<BestCombo>,
    /// Best among random-sketch, random-featsel combinations.
    pub random: Option<BestCombo>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub dataset_id: String,
    pub cells: Vec<TableCell>,
}

/// Best and random-baseline results for every dataset and backend at one
/// budget. Cells where no combination succeeded are left empty.
pub fn table_rows(records: &[EvalRecord], budget: Option<Budget>) -> Result<Vec<TableRow>> {
    let budget = match budget {
        Some(b) => b,
        None => single_budget(&records.iter().collect::<Vec<_>>(), "the results")?,
    };
    let at_budget: Vec<EvalRecord> = records.iter().filter(|r| Budget::of(r) == budget).cloned().collect();
    if at_budget.is_empty() {
        return Err(Error::data(format!(
            "no records at n_max={}, d_max={}",
            budget.n_max, budget.d_max
        )));
    }
    let random: Vec<EvalRecord> = at_budget
        .iter()
        .filter(|r| r.key.sketch == SketchMethod::Random && r.key.featsel == FeatSelMethod::Random)
        .cloned()
        .collect();
    let backends = ids(&at_budget, true);
    ids(&at_budget, false)
        .into_iter()
        .map(|ds| {
            let cells = backends
                .iter()
                .map(|b| TableCell {
                    backend_id: b.clone(),
                    best: best_combo_where(&at_budget, &ds, b, Some(budget)).ok(),
                    random: best_combo_where(&random, &ds, b, Some(budget)).ok(),
                })
                .collect();
            Ok(TableRow { dataset_id: ds, cells })
        })
        .collect()
}

/// Swept budget axis of a scaling curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAxis {
    NMax,
    DMax,
}

impl CurveAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveAxis::NMax => "n_max",
            CurveAxis::DMax => "d_max",
        }
    }

    fn level(self, r: &EvalRecord) -> usize {
        match self {
            CurveAxis::NMax => r.key.n_max,
            CurveAxis::DMax => r.key.d_max,
        }
    }

    fn other(self, r: &EvalRecord) -> usize {
        match self {
            CurveAxis::NMax => r.key.d_max,
            CurveAxis::DMax => r.key.n_max,
        }
    }
}

impl FromStr for CurveAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_max" | "n-max" => Ok(CurveAxis::NMax),
            "d_max" | "d-max" => Ok(CurveAxis::DMax),
            _ => Err(Error::param(format!("unknown curve axis `{s}` (expected n_max or d_max)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub level: usize,
    pub mean: f64,
    /// Population standard deviation across datasets.
    pub std: f64,
    pub datasets: usize,
}

/// Min-max normalization of one dataset's accuracies across levels. When
/// every level ties the result is 0.5 everywhere.
pub fn normalize_levels(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Mean and spread of per-dataset normalized accuracy at each level of
/// `axis`, for one backend and combination.
///
/// The other budget is fixed to `fixed`, which may be omitted when the
/// records hold a single value for it. A dataset contributes only when every
/// level has at least one successful fold; its level value is the mean of
/// those folds.
pub fn normalized_curves(
    records: &[EvalRecord],
    backend_id: &str,
    combo: Combo,
    axis: CurveAxis,
    fixed: Option<usize>,
) -> Result<Vec<CurvePoint>> {
    let selected: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| r.key.backend_id == backend_id && Combo::of(r) == combo)
        .collect();
    let others: BTreeSet<usize> = selected.iter().map(|r| axis.other(r)).collect();
    let fixed = match fixed {
        Some(v) => v,
        None if others.len() == 1 => *others.first().unwrap(),
        None if others.is_empty() => {
            return Err(Error::data(format!(
                "no records for backend `{backend_id}` with {}",
                combo.label()
            )))
        }
        None => {
            return Err(Error::data(format!(
                "records hold several values of the other budget; fix one to draw a {} curve",
                axis.as_str()
            )))
        }
    };

    let mut table: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    let mut levels = BTreeSet::new();
    for r in selected.into_iter().filter(|r| axis.other(r) == fixed) {
        levels.insert(axis.level(r));
        if let Outcome::Accuracy(a) = r.outcome {
            table
                .entry(r.key.dataset_id.clone())
                .or_default()
                .entry(axis.level(r))
                .or_default()
                .push(a);
        }
    }
    if levels.len() < 2 {
        return Err(Error::data(format!(
            "a {} curve needs at least 2 levels, found {}",
            axis.as_str(),
            levels.len()
        )));
    }
    let levels: Vec<usize> = levels.into_iter().collect();
    let mut normalized: Vec<Vec<f64>> = Vec::new();
    for per_level in table.values() {
        if per_level.len() != levels.len() {
            continue;
        }
        let means: Vec<f64> = levels.iter().map(|l| mean(&per_level[l])).collect();
        normalized.push(normalize_levels(&means));
    }
    if normalized.is_empty() {
        return Err(Error::data("no dataset has successful records at every level"));
    }
    let k = normalized.len() as f64;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let m = normalized.iter().map(|v| v[i]).sum::<f64>() / k;
            let var = normalized.iter().map(|v| (v[i] - m).powi(2)).sum::<f64>() / k;
            CurvePoint {
                level,
                mean: m,
                std: var.sqrt(),
                datasets: normalized.len(),
            }
        })
        .collect())
}

/// Unit of pairing for the signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// One test per dataset on the fold accuracies of each backend's best
    /// combination, Holm-corrected across datasets.
    #[default]
    Folds,
    /// One test across datasets on the best-combination means.
    DatasetMeans,
}

impl Pairing {
    pub fn as_str(self) -> &'static str {
        match self {
            Pairing::Folds => "folds",
            Pairing::DatasetMeans => "dataset_means",
        }
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "folds" => Ok(Pairing::Folds),
            "dataset_means" | "dataset-means" => Ok(Pairing::DatasetMeans),
            _ => Err(Error::param(format!("unknown pairing `{s}` (expected folds or dataset_means)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub dataset_id: String,
    pub combo_a: Combo,
    pub combo_b: Combo,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Per-dataset test; absent under dataset-mean pairing.
    pub test: Option<WilcoxonResult>,
    pub adjusted_p: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub backend_a: String,
    pub backend_b: String,
    pub budget: Budget,
    pub alpha: f64,
    pub pairing: Pairing,
    pub rows: Vec<ComparisonRow>,
    pub holm: HolmReport,
    /// The single across-dataset test under dataset-mean pairing.
    pub overall: Option<WilcoxonResult>,
    /// Significant datasets where `backend_a` has the higher mean.
    pub wins_a: usize,
    pub wins_b: usize,
    /// Significant datasets with equal means.
    pub ties: usize,
}

impl ComparisonReport {
    pub fn significant(&self) -> usize {
        self.wins_a + self.wins_b + self.ties
    }
}

/// Paired comparison of two backends' best combinations on every dataset
/// both have results for.
pub fn compare_backends(
    records: &[EvalRecord],
    backend_a: &str,
    backend_b: &str,
    alpha: f64,
    pairing: Pairing,
    budget: Option<Budget>,
) -> Result<ComparisonReport> {
    if backend_a == backend_b {
        return Err(Error::param("compare needs two different backends"));
    }
    let relevant: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| r.key.backend_id == backend_a || r.key.backend_id == backend_b)
        .filter(|r| budget.is_none_or(|b| Budget::of(r) == b))
        .collect();
    let budget = single_budget(&relevant, &format!("backends `{backend_a}` and `{backend_b}`"))?;

    let datasets_of = |backend: &str| -> BTreeSet<String> {
        relevant
            .iter()
            .filter(|r| r.key.backend_id == backend)
            .map(|r| r.key.dataset_id.clone())
            .collect()
    };
    let shared: Vec<String> = datasets_of(backend_a)
        .intersection(&datasets_of(backend_b))
        .cloned()
        .collect();
    if shared.is_empty() {
        return Err(Error::data(format!(
            "backends `{backend_a}` and `{backend_b}` share no datasets"
        )));
    }

    let mut rows = Vec::new();
    for ds in &shared {
        let a = best_combo_where(records, ds, backend_a, Some(budget))?;
        let b = best_combo_where(records, ds, backend_b, Some(budget))?;
        let test = match pairing {
            Pairing::Folds => {
                let keys_a: Vec<_> = a.fold_accuracies.iter().map(|(k, _)| *k).collect();
                let keys_b: Vec<_> = b.fold_accuracies.iter().map(|(k, _)| *k).collect();
                if keys_a != keys_b {
                    return Err(Error::data(format!(
                        "dataset `{ds}`: best combinations cover different folds"
                    )));
                }
                let xa: Vec<f64> = a.fold_accuracies.iter().map(|(_, v)| *v).collect();
                let xb: Vec<f64> = b.fold_accuracies.iter().map(|(_, v)| *v).collect();
                Some(wilcoxon_signed_rank(&xa, &xb)?)
            }
            Pairing::DatasetMeans => None,
        };
        rows.push(ComparisonRow {
            dataset_id: ds.clone(),
            combo_a: a.combo,
            combo_b: b.combo,
            mean_a: a.mean,
            mean_b: b.mean,
            test,
            adjusted_p: None,
            significant: false,
        });
    }

    let (holm, overall) = match pairing {
        Pairing::Folds => {
            let raw: Vec<f64> = rows.iter().map(|r| r.test.map_or(1.0, |t| t.p_value)).collect();
            let holm = holm_bonferroni(&raw, alpha)?;
            for (i, row) in rows.iter_mut().enumerate() {
                row.adjusted_p = Some(holm.adjusted_p[i]);
                row.significant = holm.reject[i];
            }
            (holm, None)
        }
        Pairing::DatasetMeans => {
            let ma: Vec<f64> = rows.iter().map(|r| r.mean_a).collect();
            let mb: Vec<f64> = rows.iter().map(|r| r.mean_b).collect();
            let test = wilcoxon_signed_rank(&ma, &mb)?;
            let holm = holm_bonferroni(&[test.p_value], alpha)?;
            for row in &mut rows {
                row.adjusted_p = Some(holm.adjusted_p[0]);
                row.significant = holm.reject[0];
            }
            (holm, Some(test))
        }
    };

    let (mut wins_a, mut wins_b, mut ties) = (0, 0, 0);
    for row in rows.iter().filter(|r| r.significant) {
        match row.mean_a.total_cmp(&row.mean_b) {
            std::cmp::Ordering::Greater => wins_a += 1,
            std::cmp::Ordering::Less => wins_b += 1,
            std::cmp::Ordering::Equal => ties += 1,
        }
    }
    Ok(ComparisonReport {
        backend_a: backend_a.to_string(),
        backend_b: backend_b.to_string(),
        budget,
        alpha,
        pairing,
        rows,
        holm,
        overall,
        wins_a,
        wins_b,
        ties,
    })
}

fn fmt_acc(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.4}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Table rows as CSV: per backend the best accuracy, the random-baseline
/// accuracy and the winning combination.
pub fn render_table_csv(rows: &[TableRow], budget: Budget) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# best combination per dataset and backend at n_max={}, d_max={}",
        budget.n_max, budget.d_max
    );
    let _ = writeln!(
        out,
        "# ranked by mean accuracy over the same folds reported here; acc_r is the best random-sketch, random-featsel combination"
    );
    let backends: Vec<&str> = rows
        .first()
        .map(|r| r.cells.iter().map(|c| c.backend_id.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["dataset_id".to_string()];
    for b in &backends {
        header.push(format!("acc_b_{b}"));
        header.push(format!("acc_r_{b}"));
    }
    for b in &backends {
        header.push(format!("combo_{b}"));
    }
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let mut fields = vec![row.dataset_id.clone()];
        for c in &row.cells {
            fields.push(fmt_acc(c.best.as_ref().map(|b| b.mean)));
            fields.push(fmt_acc(c.random.as_ref().map(|b| b.mean)));
        }
        for c in &row.cells {
            fields.push(c.best.as_ref().map(|b| b.combo.label()).unwrap_or_default());
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn write_table_csv(path: &Path, rows: &[TableRow], budget: Budget) -> Result<()> {
    write_text(path, &render_table_csv(rows, budget))
}

pub fn render_curve_csv(points: &[CurvePoint], axis: CurveAxis, backend_id: &str, combo: Combo) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# backend {backend_id}, combination {}, axis {}", combo.label(), axis.as_str());
    let _ = writeln!(
        out,
        "# per-dataset min-max normalization across levels; a dataset tied at every level contributes 0.5; std is the population std across datasets"
    );
    let _ = writeln!(out, "level,mean,std,datasets");
    for p in points {
        let _ = writeln!(out, "{},{:.6},{:.6},{}", p.level, p.mean, p.std, p.datasets);
    }
    out
}

pub fn write_curve_csv(path: &Path, points: &[CurvePoint], axis: CurveAxis, backend_id: &str, combo: Combo) -> Result<()> {
    write_text(path, &render_curve_csv(points, axis, backend_id, combo))
}

pub fn render_comparison_csv(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} vs {} at n_max={}, d_max={}; Wilcoxon signed-rank, pairing {}, Holm-Bonferroni at alpha {}",
        report.backend_a,
        report.backend_b,
        report.budget.n_max,
        report.budget.d_max,
        report.pairing.as_str(),
        report.alpha
    );
    if let Some(t) = &report.overall {
        let _ = writeln!(
            out,
            "# across datasets: W={} n={} p={:.6e} ({})",
            t.w_statistic,
            t.n_effective,
            t.p_value,
            t.method.as_str()
        );
    }
    let _ = writeln!(
        out,
        "# significant datasets: {} ({} wins for {}, {} for {}, {} tied)",
        report.significant(),
        report.wins_a,
        report.backend_a,
        report.wins_b,
        report.backend_b,
        report.ties
    );
    let _ = writeln!(
        out,
        "dataset_id,combo_a,combo_b,mean_a,mean_b,w_statistic,n_effective,method,p_value,adjusted_p,significant,winner"
    );
    for r in &report.rows {
        let (w, n, method, p) = match &r.test {
            Some(t) => (
                t.w_statistic.to_string(),
                t.n_effective.to_string(),
                t.method.as_str().to_string(),
                format!("{:.6e}", t.p_value),
            ),
            None => Default::default(),
        };
        let winner = if !r.significant {
            ""
        } else if r.mean_a > r.mean_b {
            &report.backend_a
        } else if r.mean_b > r.mean_a {
            &report.backend_b
        } else {
            "tie"
        };
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4},{},{},{},{},{},{},{}",
            r.dataset_id,
            r.combo_a.label(),
            r.combo_b.label(),
            r.mean_a,
            r.mean_b,
            w,
            n,
            method,
            p,
            r.adjusted_p.map_or_else(String::new, |p| format!("{p:.6e}")),
            r.significant,
            winner
        );
    }
    out
}

pub fn write_comparison_csv(path: &Path, report: &ComparisonReport) -> Result<()> {
    write_text(path, &render_comparison_csv(report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summarize::SummaryPlan;

    fn rec(ds: &str, backend: &str, combo: Combo, n_max: usize, fold: usize, acc: Option<f64>) -> EvalRecord {
        let plan = SummaryPlan::new(combo.sketch, combo.featsel, combo.strategy, n_max, 100, 0);
        let outcome = acc.map_or_else(|| Outcome::Failed("boom".into()), Outcome::Accuracy);
        EvalRecord::new(ds, backend, &plan, fold, outcome, 0.0)
    }

    fn all_combos() -> Vec<Combo> {
        let mut v = Vec::new();
        for s in SketchMethod::ALL {
            for f in FeatSelMethod::ALL {
                for c in ClassStrategy::ALL {
                    v.push(Combo::new(s, f, c));
                }
            }
        }
        v
    }

    const RRP: Combo = Combo {
        sketch: SketchMethod::Random,
        featsel: FeatSelMethod::Random,
        strategy: ClassStrategy::Proportional,
    };

    #[test]
    fn argmax_of_means() {
        let hi = Combo::new(SketchMethod::Kmeans, FeatSelMethod::Pca, ClassStrategy::Equal);
        let mut recs = Vec::new();
        for f in 0..2 {
            recs.push(rec("d", "knn", hi, 3000, f, Some(0.93)));
            recs.push(rec("d", "knn", RRP, 3000, f, Some(0.91)));
        }
        let b = best_combo(&recs, "d", "knn").unwrap();
        assert_eq!(b.combo, hi);
        assert!((b.mean - 0.93).abs() < 1e-12);
        assert_eq!(b.candidates, 2);
    }

    #[test]
    fn all_tied_reports_simplest_plan() {
        let mut recs = Vec::new();
        for c in all_combos().into_iter().rev() {
            for f in 0..3 {
                recs.push(rec("d", "knn", c, 3000, f, Some(0.8)));
            }
        }
        let b = best_combo(&recs, "d", "knn").unwrap();
        assert_eq!(b.combo, RRP);
        assert_eq!(b.combo.label(), "RND / RND / PR");
    }

    #[test]
    fn failed_fold_disqualifies_combo() {
        let hi = Combo::new(SketchMethod::Coreset, FeatSelMethod::MutualInfo, ClassStrategy::Equal);
        let recs = vec![
            rec("d", "knn", hi, 3000, 0, Some(0.99)),
            rec("d", "knn", hi, 3000, 1, None),
            rec("d", "knn", RRP, 3000, 0, Some(0.5)),
            rec("d", "knn", RRP, 3000, 1, Some(0.5)),
        ];
        assert_eq!(best_combo(&recs, "d", "knn").unwrap().combo, RRP);
        let only_failed = vec![rec("d", "knn", hi, 3000, 0, None)];
        assert!(best_combo(&only_failed, "d", "knn").is_err());
    }

    #[test]
    fn order_invariant() {
        let mut recs = Vec::new();
        for (i, c) in all_combos().into_iter().enumerate() {
            for f in 0..4 {
                let acc = 0.5 + ((i * 7 + f * 3) % 11) as f64 / 40.0;
                recs.push(rec("d", "knn", c, 3000, f, Some(acc)));
            }
        }
        let fwd = best_combo(&recs, "d", "knn").unwrap();
        recs.reverse();
        recs.swap(3, 40);
        assert_eq!(best_combo(&recs, "d", "knn").unwrap(), fwd);
    }

    #[test]
    fn several_budgets_need_selection() {
        let recs = vec![
            rec("d", "knn", RRP, 100, 0, Some(0.5)),
            rec("d", "knn", RRP, 500, 0, Some(0.6)),
        ];
        assert!(best_combo(&recs, "d", "knn").is_err());
        let b = best_combo_where(&recs, "d", "knn", Some(Budget { n_max: 500, d_max: 100 })).unwrap();
        assert!((b.mean - 0.6).abs() < 1e-12);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_levels(&[0.5, 0.75, 1.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_levels(&[0.7, 0.7, 0.7]), vec![0.5; 3]);
        let a = normalize_levels(&[0.2, 0.4, 0.9]);
        let b = normalize_levels(&[0.2 * 3.0 + 1.0, 0.4 * 3.0 + 1.0, 0.9 * 3.0 + 1.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_trends_average_to_half() {
        let mut recs = Vec::new();
        for (i, n) in [100, 500, 3000].into_iter().enumerate() {
            recs.push(rec("up", "knn", RRP, n, 0, Some(0.5 + 0.1 * i as f64)));
            recs.push(rec("down", "knn", RRP, n, 0, Some(0.9 - 0.2 * i as f64)));
        }
        let pts = normalized_curves(&recs, "knn", RRP, CurveAxis::NMax, None).unwrap();
        assert_eq!(pts.iter().map(|p| p.level).collect::<Vec<_>>(), vec![100, 500, 3000]);
        // hand-normalized: up = {0, 0.5, 1}, down = {1, 0.5, 0}
        let stds = [0.5, 0.0, 0.5];
        for (p, s) in pts.iter().zip(stds) {
            assert!((p.mean - 0.5).abs() < 1e-12);
            assert!((p.std - s).abs() < 1e-12);
            assert_eq!(p.datasets, 2);
        }
    }

    #[test]
    fn curve_needs_two_levels() {
        let recs = vec![rec("d", "knn", RRP, 100, 0, Some(0.5))];
        assert!(normalized_curves(&recs, "knn", RRP, CurveAxis::NMax, None).is_err());
    }

    fn paired(delta: f64, datasets: usize) -> Vec<EvalRecord> {
        let mut recs = Vec::new();
        for d in 0..datasets {
            for f in 0..10 {
                let base = 0.5 + 0.03 * f as f64 + 0.01 * d as f64;
                recs.push(rec(&format!("d{d}"), "a", RRP, 3000, f, Some(base + delta)));
                recs.push(rec(&format!("d{d}"), "b", RRP, 3000, f, Some(base)));
            }
        }
        recs
    }

    #[test]
    fn identical_backends_have_no_significant_datasets() {
        let r = compare_backends(&paired(0.0, 5), "a", "b", 0.05, Pairing::Folds, None).unwrap();
        assert_eq!(r.significant(), 0);
        assert!(r.rows.iter().all(|row| row.test.unwrap().p_value == 1.0));
    }

    #[test]
    fn uniformly_better_backend_wins_everything() {
        let r = compare_backends(&paired(0.1, 17), "a", "b", 0.05, Pairing::Folds, None).unwrap();
        assert_eq!(r.rows.len(), 17);
        // exact p for ten same-signed differences is 2 / 2^10
        for row in &r.rows {
            assert!((row.test.unwrap().p_value - 2.0 / 1024.0).abs() < 1e-15);
        }
        assert_eq!((r.wins_a, r.wins_b, r.ties), (17, 0, 0));
    }

    #[test]
    fn dataset_mean_pairing() {
        let r = compare_backends(&paired(0.1, 8), "a", "b", 0.05, Pairing::DatasetMeans, None).unwrap();
        let t = r.overall.unwrap();
        assert_eq!(t.n_effective, 8);
        assert!((t.p_value - 2.0 / 256.0).abs() < 1e-15);
        assert_eq!(r.wins_a, 8);
    }

    #[test]
    fn compare_requires_shared_datasets() {
        let recs = vec![rec("x", "a", RRP, 3000, 0, Some(0.5)), rec("y", "b", RRP, 3000, 0, Some(0.5))];
        assert!(compare_backends(&recs, "a", "b", 0.05, Pairing::Folds, None).is_err());
    }

    #[test]
    fn table_has_best_and_random_columns() {
        let km = Combo::new(SketchMethod::Kmeans, FeatSelMethod::Random, ClassStrategy::Equal);
        let recs = vec![
            rec("d", "knn", km, 3000, 0, Some(0.9)),
            rec("d", "knn", RRP, 3000, 0, Some(0.8)),
        ];
        let rows = table_rows(&recs, None).unwrap();
        let cell = &rows[0].cells[0];
        assert_eq!(cell.best.as_ref().unwrap().combo, km);
        assert_eq!(cell.random.as_ref().unwrap().combo, RRP);
        let text = render_table_csv(&rows, Budget { n_max: 3000, d_max: 100 });
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "dataset_id,acc_b_knn,acc_r_knn,combo_knn");
        assert_eq!(data[1], "d,0.9000,0.8000,KMN / RND / EQ");
    }
}
