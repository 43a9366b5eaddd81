use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tabsketch::bench::{
    budgets, compare_backends, normalized_curves, read_results, render_comparison_csv, render_curve_csv,
    render_table_csv, run_grid, table_rows, Budget, Combo, EvalRecord, Outcome, RunOptions,
};
use tabsketch::dataset::{load_csv, pct_seen};
use tabsketch::featsel::FeatSelParams;
use tabsketch::{summarize as summarize_table, SummaryPlan};

use crate::config::RunConfig;
use crate::{fit_order, BenchArgs, CompareArgs, Failure, ReportArgs, SummarizeArgs};

/// Writes `path` through a temporary sibling so readers never see a partial
/// file.
fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> tabsketch::Result<()>) -> Result<(), Failure> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    if let Err(e) = write(&tmp) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    std::fs::rename(&tmp, path).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, |tmp| std::fs::write(tmp, text).map_err(Into::into))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))
}

fn results_dir(results: &Path, output_dir: Option<PathBuf>) -> PathBuf {
    output_dir.unwrap_or_else(|| results.parent().map(Path::to_path_buf).unwrap_or_default())
}

fn safe_name(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn summarize(a: SummarizeArgs) -> Result<(), Failure> {
    let mut plan = SummaryPlan::new(a.sketch, a.featsel, a.strategy, a.n_max, a.d_max, a.seed);
    plan.featsel_params = FeatSelParams {
        bins: a.bins,
        pca_scale: a.pca_scale,
    };
    plan.fit_order = fit_order(a.sketch_first);
    plan.validate()?;

    let mut ds = load_csv(&a.input, &a.label_col, a.missing)?;
    if let Some(id) = a.id {
        ds.set_id(id);
    }
    let ctx = summarize_table(ds.features(), ds.labels(), ds.num_classes(), &plan, ds.id(), None)?;

    create_dir(&a.output_dir)?;
    let stem = safe_name(ds.id());
    let csv_path = a.output_dir.join(format!("{stem}_compact.csv"));
    let sidecar_path = a.output_dir.join(format!("{stem}_transform.json"));
    write_atomic(&csv_path, |p| ctx.write_csv(p, ds.feature_names(), ds.class_names(), &a.label_col))?;
    write_atomic(&sidecar_path, |p| ctx.write_sidecar(p))?;

    println!("dataset {}: {} rows x {} features, {} classes", ds.id(), ds.n_rows(), ds.n_features(), ds.num_classes());
    println!("plan {} (seed {})", plan.combo_label(), plan.seed);
    println!("n' = {} (n_max {})", ctx.n_rows(), plan.n_max);
    println!("d' = {} (d_max {})", ctx.d_out(), plan.d_max);
    for (name, count) in ds.class_names().iter().zip(ctx.class_counts()) {
        println!("  class {name}: {count}");
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", sidecar_path.display());
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(&a.config)?;
    let g = &mut cfg.grid;
    if let Some(v) = a.seed {
        g.seed = v;
    }
    if let Some(v) = a.n_max {
        g.n_max = v;
    }
    if let Some(v) = a.d_max {
        g.d_max = v;
    }
    if let Some(v) = a.sketch {
        g.sketch = v;
    }
    if let Some(v) = a.featsel {
        g.featsel = v;
    }
    if let Some(v) = a.strategy {
        g.strategy = v;
    }
    if let Some(v) = a.bins {
        g.featsel_params.bins = v;
    }
    if let Some(v) = a.folds {
        g.folds = v;
    }
    cfg.validate()?;
    let jobs = a.jobs.or(cfg.jobs).unwrap_or(0);
    let out_dir = a
        .output_dir
        .or(cfg.output_dir.clone())
        .unwrap_or_else(|| a.config.parent().map(Path::to_path_buf).unwrap_or_default());

    let datasets = cfg.datasets.iter().map(|d| d.load()).collect::<Result<Vec<_>, _>>()?;
    create_dir(&out_dir)?;
    let results_path = out_dir.join("results.csv");

    let quiet = a.quiet;
    let progress = move |done: usize, total: usize| {
        if !quiet && (done == total || done.is_multiple_of((total / 20).max(1))) {
            eprintln!("[{done}/{total}] cells done");
        }
    };
    let run = run_grid(&cfg.grid, &datasets, &cfg.backends, &results_path, &RunOptions { jobs }, &progress)?;

    let n_ref = cfg.grid.n_max.iter().copied().max().unwrap_or(0);
    let mut meta = String::from("dataset_id,num_classes,num_features,num_samples,pct_seen\n");
    for ds in &datasets {
        let m = ds.meta(n_ref);
        let _ = writeln!(
            meta,
            "{},{},{},{},{}",
            m.id,
            m.num_classes,
            m.num_features,
            m.num_samples,
            pct_seen(m.num_samples, n_ref)
        );
    }
    let meta_path = out_dir.join("datasets.csv");
    write_text(&meta_path, &meta)?;

    let failed: Vec<&EvalRecord> = run
        .records
        .iter()
        .filter(|r| matches!(r.outcome, Outcome::Failed(_)))
        .collect();
    println!(
        "{} records written, {} already present, {} failed",
        run.records.len(),
        run.skipped,
        failed.len()
    );
    println!("wrote {}", results_path.display());
    println!("wrote {}", meta_path.display());
    if let Some(first) = failed.first() {
        let Outcome::Failed(reason) = &first.outcome else { unreachable!() };
        return Err(Failure::Backend(format!(
            "{} evaluations failed; first ({} / {} fold {}): {reason}",
            failed.len(),
            first.key.dataset_id,
            first.key.backend_id,
            first.key.fold
        )));
    }
    Ok(())
}

/// The budget named by the flags, or `None` to let the records decide.
fn pick_budget(records: &[EvalRecord], n_max: Option<usize>, d_max: Option<usize>) -> Result<Option<Budget>, Failure> {
    if n_max.is_none() && d_max.is_none() {
        return Ok(None);
    }
    let matching: Vec<Budget> = budgets(records)
        .into_iter()
        .filter(|b| n_max.is_none_or(|n| b.n_max == n) && d_max.is_none_or(|d| b.d_max == d))
        .collect();
    match matching.as_slice() {
        [b] => Ok(Some(*b)),
        [] => Err(Failure::Data("no results at the requested budget".into())),
        _ => Err(Failure::Usage("several budgets match; give both --n-max and --d-max".into())),
    }
}

pub fn compare(a: CompareArgs) -> Result<(), Failure> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let records = read_results(&a.results)?;
    let budget = pick_budget(&records, a.n_max, a.d_max)?;
    let report = compare_backends(&records, &a.backend_a, &a.backend_b, a.alpha, a.pairing, budget)?;

    let out_dir = results_dir(&a.results, a.output_dir);
    create_dir(&out_dir)?;
    let path = out_dir.join(format!(
        "comparison_{}_vs_{}.csv",
        safe_name(&a.backend_a),
        safe_name(&a.backend_b)
    ));
    write_text(&path, &render_comparison_csv(&report))?;

    for row in &report.rows {
        println!(
            "{}: {} {:.4} ({}) vs {} {:.4} ({}), adjusted p {}{}",
            row.dataset_id,
            report.backend_a,
            row.mean_a,
            row.combo_a.label(),
            report.backend_b,
            row.mean_b,
            row.combo_b.label(),
            row.adjusted_p.map_or_else(|| "-".into(), |p| format!("{p:.4}")),
            if row.significant { " *" } else { "" }
        );
    }
    println!(
        "{} of {} datasets significant at alpha {}: {} better on {}, {} better on {}",
        report.significant(),
        report.rows.len(),
        report.alpha,
        report.backend_a,
        report.wins_a,
        report.backend_b,
        report.wins_b
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<(), Failure> {
    let records = read_results(&a.results)?;
    if records.is_empty() {
        return Err(Failure::Data(format!("{} holds no records", a.results.display())));
    }
    let out_dir = results_dir(&a.results, a.output_dir.clone());

    let selected: Vec<Budget> = match pick_budget(&records, a.n_max, a.d_max) {
        Ok(Some(b)) => vec![b],
        Ok(None) => budgets(&records),
        // a curve fixes only one axis, so tables fall back to every match
        Err(Failure::Usage(_)) => budgets(&records)
            .into_iter()
            .filter(|b| a.n_max.is_none_or(|n| b.n_max == n) && a.d_max.is_none_or(|d| b.d_max == d))
            .collect(),
        Err(e) => return Err(e),
    };
    let mut outputs: Vec<(PathBuf, String)> = Vec::new();
    for budget in &selected {
        let rows = table_rows(&records, Some(*budget))?;
        let path = out_dir.join(format!("table_n{}_d{}.csv", budget.n_max, budget.d_max));
        outputs.push((path, render_table_csv(&rows, *budget)));
    }

    let mut curve_lines = Vec::new();
    if let Some(axis) = a.axis {
        let combo = Combo::new(a.sketch, a.featsel, a.strategy);
        let fixed = match axis {
            tabsketch::bench::CurveAxis::NMax => a.d_max,
            tabsketch::bench::CurveAxis::DMax => a.n_max,
        };
        let backends: Vec<String> = match &a.backend {
            Some(b) => vec![b.clone()],
            None => records
                .iter()
                .map(|r| r.key.backend_id.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        for backend in &backends {
            let points = normalized_curves(&records, backend, combo, axis, fixed)?;
            for p in &points {
                curve_lines.push(format!(
                    "{backend} {}={}: normalized accuracy {:.4} +/- {:.4} over {} datasets",
                    axis.as_str(),
                    p.level,
                    p.mean,
                    p.std,
                    p.datasets
                ));
            }
            let path = out_dir.join(format!("curve_{}_{}.csv", axis.as_str(), safe_name(backend)));
            outputs.push((path, render_curve_csv(&points, axis, backend, combo)));
        }
    }

    create_dir(&out_dir)?;
    for (path, text) in &outputs {
        write_text(path, text)?;
    }
    for line in curve_lines {
        println!("{line}");
    }
    for (path, _) in &outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}
