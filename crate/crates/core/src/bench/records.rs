use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::featsel::FeatSelMethod;
use crate::sketch::{ClassStrategy, SketchMethod};
use crate::summarize::SummaryPlan;

pub const RESULTS_HEADER: [&str; 12] = [
    "dataset_id",
    "backend_id",
    "sketch",
    "featsel",
    "strategy",
    "n_max",
    "d_max",
    "seed",
    "fold",
    "accuracy",
    "failure",
    "elapsed_s",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Accuracy(f64),
    Failed(String),
}

/// Identifies one evaluation; used for resume.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub dataset_id: String,
    pub backend_id: String,
    pub sketch: SketchMethod,
    pub featsel: FeatSelMethod,
    pub strategy: ClassStrategy,
    pub n_max: usize,
    pub d_max: usize,
    pub seed: u64,
    pub fold: usize,
}

/// One `(dataset, backend, plan, fold)` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub key: RecordKey,
    pub outcome: Outcome,
    pub elapsed_s: f64,
}

impl EvalRecord {
    pub fn new(dataset_id: &str, backend_id: &str, plan: &SummaryPlan, fold: usize, outcome: Outcome, elapsed_s: f64) -> Self {
        EvalRecord {
            key: RecordKey {
                dataset_id: dataset_id.to_string(),
                backend_id: backend_id.to_string(),
                sketch: plan.sketch,
                featsel: plan.featsel,
                strategy: plan.strategy,
                n_max: plan.n_max,
                d_max: plan.d_max,
                seed: plan.seed,
                fold,
            },
            outcome,
            elapsed_s,
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Accuracy(a) => Some(a),
            Outcome::Failed(_) => None,
        }
    }

    fn to_row(&self) -> [String; 12] {
        let k = &self.key;
        let (acc, failure) = match &self.outcome {
            Outcome::Accuracy(a) => (a.to_string(), String::new()),
            Outcome::Failed(reason) => (String::new(), reason.replace(['\n', '\r'], " ")),
        };
        [
            k.dataset_id.clone(),
            k.backend_id.clone(),
            k.sketch.to_string(),
            k.featsel.to_string(),
            k.strategy.to_string(),
            k.n_max.to_string(),
            k.d_max.to_string(),
            k.seed.to_string(),
            k.fold.to_string(),
            acc,
            failure,
            format!("{:.6}", self.elapsed_s),
        ]
    }

    fn from_row(row: &csv::StringRecord) -> Result<Self> {
        let bad = |what: &str| Error::data(format!("results row has invalid {what}: {row:?}"));
        if row.len() != RESULTS_HEADER.len() {
            return Err(bad("field count"));
        }
        let num = |i: usize, what: &str| row[i].parse::<u64>().map_err(|_| bad(what));
        let outcome = match (&row[9], &row[10]) {
            (acc, "") if !acc.is_empty() => {
                let a: f64 = acc.parse().map_err(|_| bad("accuracy"))?;
                if !(0.0..=1.0).contains(&a) {
                    return Err(bad("accuracy"));
                }
                Outcome::Accuracy(a)
            }
            ("", reason) if !reason.is_empty() => Outcome::Failed(reason.to_string()),
            _ => return Err(bad("accuracy/failure pair")),
        };
        Ok(EvalRecord {
            key: RecordKey {
                dataset_id: row[0].to_string(),
                backend_id: row[1].to_string(),
                sketch: row[2].parse()?,
                featsel: row[3].parse()?,
                strategy: row[4].parse()?,
                n_max: num(5, "n_max")? as usize,
                d_max: num(6, "d_max")? as usize,
                seed: num(7, "seed")?,
                fold: num(8, "fold")? as usize,
            },
            outcome,
            elapsed_s: row[11].parse().map_err(|_| bad("elapsed_s"))?,
        })
    }
}

/// Reads every record of a results file.
pub fn read_results(path: &Path) -> Result<Vec<EvalRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::data(format!("{} does not have the results header", path.display())));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        out.push(EvalRecord::from_row(&row.map_err(csv_err)?)?);
    }
    Ok(out)
}

/// Append-only writer for a results file.
pub struct ResultsWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl ResultsWriter {
    /// Opens `path` for appending, writing the header if the file is new.
    /// A partial trailing line left by an interrupted run is cut off.
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        let mut existing = Vec::new();
        file.read_to_end(&mut existing)?;
        if let Some(last_nl) = existing.iter().rposition(|&b| b == b'\n') {
            if last_nl + 1 != existing.len() {
                file.set_len(last_nl as u64 + 1)?;
            }
        } else if !existing.is_empty() {
            file.set_len(0)?;
            existing.clear();
        }
        if !existing.is_empty() {
            let first = existing.split(|&b| b == b'\n').next().unwrap_or_default();
            if first != RESULTS_HEADER.join(",").as_bytes() {
                return Err(Error::data(format!("{} does not have the results header", path.display())));
            }
        }
        file.seek(SeekFrom::End(0))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if existing.is_empty() {
            writer.write_record(RESULTS_HEADER).map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            writer.flush()?;
        }
        Ok(ResultsWriter {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn append(&mut self, records: &[EvalRecord]) -> Result<()> {
        for r in records {
            self.writer.write_record(r.to_row()).map_err(|source| Error::Csv {
                path: self.path.clone(),
                source,
            })?;
        }
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes a results file from scratch.
pub fn write_results(path: &Path, records: &[EvalRecord]) -> Result<()> {
    File::create(path)?;
    ResultsWriter::open(path)?.append(records)
}
