//! Labelled numeric tables, CSV ingestion and stratified folds.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derived_rng;

/// A dense labelled table: `features` is `n x d`, `labels[i] < num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset and checks its invariants. Class names default to
    /// `"0".."m-1"`.
    pub fn new(
        id: impl Into<String>,
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let class_names = (0..num_classes).map(|c| c.to_string()).collect();
        Self::with_class_names(id, features, labels, num_classes, feature_names, class_names)
    }

    pub fn with_class_names(
        id: impl Into<String>,
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::data(format!("dataset must be non-empty, got {n}x{d}")));
        }
        if labels.len() != n {
            return Err(Error::data(format!("{} labels for {n} rows", labels.len())));
        }
        if feature_names.len() != d {
            return Err(Error::data(format!(
                "{} feature names for {d} columns",
                feature_names.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::data(format!("need at least 2 classes, got {num_classes}")));
        }
        if class_names.len() != num_classes {
            return Err(Error::data("class name count does not match num_classes"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("feature matrix contains non-finite values"));
        }
        let counts = class_counts(&labels, num_classes)?;
        if let Some(c) = counts.iter().position(|&k| k == 0) {
            return Err(Error::data(format!("class {c} has no rows")));
        }
        Ok(Dataset {
            id: id.into(),
            features,
            labels,
            num_classes,
            feature_names,
            class_names,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Copies out the given rows (features and labels).
    pub fn take_rows(&self, rows: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let x = self.features.select(Axis(0), rows);
        let y = rows.iter().map(|&r| self.labels[r]).collect();
        (x, y)
    }

    pub fn meta(&self, n_max: usize) -> DatasetMeta {
        DatasetMeta {
            id: self.id.clone(),
            num_classes: self.num_classes,
            num_features: self.n_features(),
            num_samples: self.n_rows(),
            pct_seen: pct_seen(self.n_rows(), n_max),
        }
    }
}

/// Per-class row counts; fails if a label is out of range.
pub fn class_counts(labels: &[usize], num_classes: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; num_classes];
    for &y in labels {
        if y >= num_classes {
            return Err(Error::data(format!("label {y} out of range for {num_classes} classes")));
        }
        counts[y] += 1;
    }
    Ok(counts)
}

/// One row of the dataset overview table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub id: String,
    pub num_classes: usize,
    pub num_features: usize,
    pub num_samples: usize,
    pub pct_seen: f64,
}

/// Percentage of `n` rows visible under a row budget, capped at 100 and
/// rounded to one decimal.
pub fn pct_seen(n: usize, n_max: usize) -> f64 {
    if n == 0 {
        return 100.0;
    }
    let pct = (100.0 * n_max as f64 / n as f64).min(100.0);
    (pct * 10.0).round() / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    ImputeMean,
}

impl std::str::FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(MissingPolicy::Reject),
            "impute_mean" | "impute-mean" => Ok(MissingPolicy::ImputeMean),
            other => Err(Error::param(format!("unknown missing-value policy `{other}`"))),
        }
    }
}

/// Loads a CSV file with a header row.
///
/// Numeric columns are parsed as reals; any other feature column is
/// ordinal-encoded by first appearance. Labels are dictionary-encoded by
/// first appearance in file order. An empty cell is a missing value: the row
/// is dropped under [`MissingPolicy::Reject`], or the cell is replaced by the
/// column mean under [`MissingPolicy::ImputeMean`]. Rows with a missing label
/// are always dropped. The dataset id is the file stem.
pub fn load_csv(path: &Path, label_column: &str, missing: MissingPolicy) -> Result<Dataset> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::data(format!("label column `{label_column}` not in header")))?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    from_string_table(id, &header, &rows, label_idx, missing)
}

/// Encodes an in-memory string table the same way [`load_csv`] does.
pub fn from_string_table(
    id: String,
    header: &[String],
    rows: &[Vec<String>],
    label_idx: usize,
    missing: MissingPolicy,
) -> Result<Dataset> {
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(Error::data("no feature columns"));
    }
    if rows.is_empty() {
        return Err(Error::data("file has no data rows"));
    }

    // labels, first appearance over the whole file
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<&str, usize> = HashMap::new();
    let mut raw_labels: Vec<Option<usize>> = Vec::with_capacity(rows.len());
    for row in rows {
        let cell = row[label_idx].as_str();
        if cell.is_empty() {
            raw_labels.push(None);
            continue;
        }
        let next = class_index.len();
        let code = *class_index.entry(cell).or_insert_with(|| {
            class_names.push(cell.to_string());
            next
        });
        raw_labels.push(Some(code));
    }

    // features: numeric if every present cell parses as a finite real
    let mut columns: Vec<Vec<Option<f64>>> = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let numeric = rows.iter().all(|r| {
            let cell = r[c].as_str();
            cell.is_empty() || cell.parse::<f64>().map(f64::is_finite).unwrap_or(false)
        });
        let col = if numeric {
            rows.iter()
                .map(|r| (!r[c].is_empty()).then(|| r[c].parse::<f64>().unwrap()))
                .collect()
        } else {
            let mut codes: HashMap<&str, usize> = HashMap::new();
            rows.iter()
                .map(|r| {
                    let cell = r[c].as_str();
                    if cell.is_empty() {
                        return None;
                    }
                    let next = codes.len();
                    Some(*codes.entry(cell).or_insert(next) as f64)
                })
                .collect()
        };
        columns.push(col);
    }

    let keep: Vec<usize> = (0..rows.len())
        .filter(|&i| {
            raw_labels[i].is_some()
                && (missing == MissingPolicy::ImputeMean || columns.iter().all(|col| col[i].is_some()))
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::data("zero usable rows after filtering"));
    }

    let d = feature_cols.len();
    let mut features = Array2::<f64>::zeros((keep.len(), d));
    for (j, col) in columns.iter().enumerate() {
        let fill = if missing == MissingPolicy::ImputeMean {
            let present: Vec<f64> = keep.iter().filter_map(|&i| col[i]).collect();
            if present.is_empty() {
                return Err(Error::data(format!(
                    "column `{}` has no values to impute from",
                    header[feature_cols[j]]
                )));
            }
            present.iter().sum::<f64>() / present.len() as f64
        } else {
            0.0
        };
        for (r, &i) in keep.iter().enumerate() {
            features[[r, j]] = col[i].unwrap_or(fill);
        }
    }
    let labels: Vec<usize> = keep.iter().map(|&i| raw_labels[i].unwrap()).collect();
    let num_classes = class_names.len();
    let counts = class_counts(&labels, num_classes)?;
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(Error::data(format!(
            "class `{}` has zero rows after filtering",
            class_names[c]
        )));
    }
    let feature_names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    Dataset::with_class_names(id, features, labels, num_classes, feature_names, class_names)
}

/// One train/test split of a k-fold partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Stratified k-fold partition.
///
/// Rows of each class are shuffled with a per-class seeded generator and dealt
/// round-robin into the k test partitions. The deal position carries over
/// from one class to the next so total test sizes differ by at most one.
/// Every class needs at least two rows, otherwise some train partition would
/// miss it.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    stratified_folds_from_labels(ds.labels(), ds.num_classes(), k, seed)
}

pub fn stratified_folds_from_labels(
    labels: &[usize],
    num_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::param(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::param(format!("{k} folds requested for {n} rows")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(Error::data(format!("label {y} out of range")));
        }
        by_class[y].push(i);
    }
    if let Some(c) = by_class.iter().position(|rows| rows.len() < 2) {
        return Err(Error::data(format!(
            "class {c} has fewer than 2 rows; it cannot appear in every train partition"
        )));
    }

    let mut test_of = vec![0usize; n];
    let mut deal = 0usize;
    for (c, rows) in by_class.iter_mut().enumerate() {
        let mut rng = derived_rng(seed, &["folds".into(), c.into()]);
        rows.shuffle(&mut rng);
        for &r in rows.iter() {
            test_of[r] = deal % k;
            deal += 1;
        }
    }

    Ok((0..k)
        .map(|f| {
            let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&r| test_of[r] == f);
            FoldSplit {
                fold_index: f,
                train_rows,
                test_rows,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn labels_encoded_by_first_appearance() {
        let f = write_tmp("a,label\n1.0,cat\n2.0,dog\n3.0,cat\n");
        let ds = load_csv(f.path(), "label", MissingPolicy::Reject).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.class_names(), &["cat".to_string(), "dog".to_string()]);
    }

    #[test]
    fn reject_drops_rows_with_missing_features() {
        let f = write_tmp("a,b,y\n1,2,x\n3,,y\n5,6,x\n7,8,y\n");
        let ds = load_csv(f.path(), "y", MissingPolicy::Reject).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.features().row(1).to_vec(), vec![5.0, 6.0]);
    }

    #[test]
    fn impute_mean_fills_missing_cells() {
        let f = write_tmp("a,b,y\n1,2,x\n3,,y\n5,6,x\n7,10,y\n");
        let ds = load_csv(f.path(), "y", MissingPolicy::ImputeMean).unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.features()[[1, 1]], 6.0);
    }

    #[test]
    fn categorical_features_are_ordinal() {
        let f = write_tmp("color,v,y\nred,1,a\nblue,2,b\nred,3,a\ngreen,4,b\n");
        let ds = load_csv(f.path(), "y", MissingPolicy::Reject).unwrap();
        let col: Vec<f64> = ds.features().column(0).to_vec();
        assert_eq!(col, vec![0.0, 1.0, 0.0, 2.0]);
        assert_eq!(ds.feature_names(), &["color".to_string(), "v".to_string()]);
    }

    #[test]
    fn missing_label_column_is_an_error() {
        let f = write_tmp("a,b\n1,2\n");
        let err = load_csv(f.path(), "y", MissingPolicy::Reject).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }

    #[test]
    fn class_emptied_by_filtering_is_an_error() {
        let f = write_tmp("a,y\n1,x\n,z\n2,y\n");
        let err = load_csv(f.path(), "y", MissingPolicy::Reject).unwrap_err();
        assert!(err.to_string().contains("zero rows"), "{err}");
    }

    #[test]
    fn all_rows_rejected_is_an_error() {
        let f = write_tmp("a,y\n,x\n,y\n");
        assert!(load_csv(f.path(), "y", MissingPolicy::Reject).is_err());
    }

    #[test]
    fn ragged_file_is_an_error() {
        let f = write_tmp("a,y\n1,x,3\n");
        assert!(matches!(
            load_csv(f.path(), "y", MissingPolicy::Reject),
            Err(Error::Csv { .. })
        ));
    }

    #[test]
    fn loading_twice_is_identical() {
        let f = write_tmp("a,c,y\n1.5,u,p\n2.5,v,q\n0.5,u,p\n");
        let a = load_csv(f.path(), "y", MissingPolicy::Reject).unwrap();
        let b = load_csv(f.path(), "y", MissingPolicy::Reject).unwrap();
        assert_eq!(a, b);
    }

    fn toy(labels: Vec<usize>, m: usize) -> Dataset {
        let n = labels.len();
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        Dataset::new("toy", x, labels, m, vec!["f".into()]).unwrap()
    }

    #[test]
    fn balanced_deal_puts_one_of_each_class_per_fold() {
        let ds = toy(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2);
        let folds = stratified_folds(&ds, 5, 3).unwrap();
        for f in &folds {
            let mut c = [0; 2];
            for &r in &f.test_rows {
                c[ds.labels()[r]] += 1;
            }
            assert_eq!(c, [1, 1]);
        }
    }

    #[test]
    fn folds_are_deterministic() {
        let ds = toy((0..30).map(|i| i % 3).collect(), 3);
        assert_eq!(stratified_folds(&ds, 4, 9).unwrap(), stratified_folds(&ds, 4, 9).unwrap());
        assert_ne!(stratified_folds(&ds, 4, 9).unwrap(), stratified_folds(&ds, 4, 10).unwrap());
    }

    #[test]
    fn every_train_partition_holds_both_classes() {
        let mut labels = vec![0; 12];
        labels.extend(vec![1; 8]);
        let ds = toy(labels, 2);
        let folds = stratified_folds(&ds, 10, 17).unwrap();
        for f in &folds {
            let mut c = [0; 2];
            for &r in &f.train_rows {
                c[ds.labels()[r]] += 1;
            }
            assert!(c[0] > 0 && c[1] > 0, "fold {} lacks a class", f.fold_index);
        }
    }

    #[test]
    fn too_many_folds_rejected() {
        let ds = toy(vec![0, 1, 0, 1], 2);
        assert!(stratified_folds(&ds, 5, 0).is_err());
        assert!(stratified_folds(&ds, 1, 0).is_err());
    }

    #[test]
    fn pct_seen_matches_overview_table() {
        // (n samples, reported pct) for the nineteen benchmark datasets
        let table = [
            (539383, 0.6),
            (425240, 0.7),
            (60000, 5.0),
            (67557, 4.4),
            (14980, 20.0),
            (16599, 18.1),
            (70000, 4.3),
            (13910, 21.6),
            (98050, 3.1),
            (1212, 100.0),
            (2000, 100.0),
            (2000, 100.0),
            (10992, 27.3),
            (1025009, 0.3),
            (20000, 15.0),
            (10000, 30.0),
            (1593, 100.0),
            (245057, 1.2),
            (58310, 5.1),
        ];
        for (n, expected) in table {
            assert_eq!(pct_seen(n, 3000), expected, "n = {n}");
        }
    }

    #[test]
    fn pct_seen_is_monotone_and_capped() {
        let mut prev = 0.0;
        for n_max in (1..5000).step_by(37) {
            let p = pct_seen(1234, n_max);
            assert!(p >= prev && p <= 100.0);
            prev = p;
        }
    }
}
