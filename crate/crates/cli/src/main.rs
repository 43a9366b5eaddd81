mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabsketch::bench::{CurveAxis, Pairing};
use tabsketch::{ClassStrategy, FeatSelMethod, FitOrder, MissingPolicy, SketchMethod};

/// Error classes, one exit code each.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Backend(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Backend(m) => m,
        }
    }
}

impl From<tabsketch::Error> for Failure {
    fn from(e: tabsketch::Error) -> Self {
        match e {
            tabsketch::Error::Param(_) => Failure::Usage(e.to_string()),
            tabsketch::Error::Backend(_) => Failure::Backend(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "tabsketch", version, about = "Summarize labelled tables into compact contexts and benchmark the summaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize one CSV dataset into a compact context and transform sidecar.
    Summarize(SummarizeArgs),
    /// Run an experiment grid from a JSON config, appending to results.csv.
    Bench(BenchArgs),
    /// Paired significance test between two backends' best combinations.
    Compare(CompareArgs),
    /// Best-combination tables and normalized scaling curves.
    Report(ReportArgs),
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    label_col: String,
    /// Dataset id used in file names and seeds (default: file stem).
    #[arg(long)]
    id: Option<String>,
    #[arg(long, default_value = "reject")]
    missing: MissingPolicy,
    #[arg(long, default_value_t = 3000)]
    n_max: usize,
    #[arg(long, default_value_t = 100)]
    d_max: usize,
    #[arg(long, default_value = "random")]
    sketch: SketchMethod,
    #[arg(long, default_value = "random")]
    featsel: FeatSelMethod,
    #[arg(long, default_value = "proportional")]
    strategy: ClassStrategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Quantile bins for mutual information.
    #[arg(long, default_value_t = 16)]
    bins: usize,
    /// Scale columns to unit variance before PCA.
    #[arg(long)]
    pca_scale: bool,
    /// Fit the feature transform on the sketched rows instead of the full table.
    #[arg(long)]
    sketch_first: bool,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: number of processors).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    n_max: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    d_max: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sketch: Option<Vec<SketchMethod>>,
    #[arg(long, value_delimiter = ',')]
    featsel: Option<Vec<FeatSelMethod>>,
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<ClassStrategy>>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    backend_a: String,
    #[arg(long)]
    backend_b: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// `folds` (one test per dataset) or `dataset_means` (one test overall).
    #[arg(long, default_value = "folds")]
    pairing: Pairing,
    /// Budget to compare at, when the results hold several.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    d_max: Option<usize>,
    /// Default: the results file's directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    /// Also write normalized curves over this budget axis (n_max or d_max).
    #[arg(long)]
    axis: Option<CurveAxis>,
    /// Restrict to one budget; on a curve, fixes the axis not being swept.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    d_max: Option<usize>,
    /// Curves only for this backend (default: every backend).
    #[arg(long)]
    backend: Option<String>,
    /// Combination the curves follow.
    #[arg(long, default_value = "random")]
    sketch: SketchMethod,
    #[arg(long, default_value = "mutual_info")]
    featsel: FeatSelMethod,
    #[arg(long, default_value = "proportional")]
    strategy: ClassStrategy,
    /// Default: the results file's directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Summarize(a) => commands::summarize(a),
        Command::Bench(a) => commands::bench(a),
        Command::Compare(a) => commands::compare(a),
        Command::Report(a) => commands::report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message().replace('\n', " "));
            ExitCode::from(f.exit_code())
        }
    }
}

pub(crate) fn fit_order(sketch_first: bool) -> FitOrder {
    if sketch_first {
        FitOrder::SketchFirst
    } else {
        FitOrder::FeaturesFirst
    }
}
