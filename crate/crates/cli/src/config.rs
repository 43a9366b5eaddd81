//! Declarative run configuration for `tabsketch bench`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tabsketch::bench::GridSpec;
use tabsketch::dataset::load_csv;
use tabsketch::synthetic;
use tabsketch::{BackendSpec, Dataset, MissingPolicy};

use crate::Failure;

/// One dataset: a CSV file or a built-in synthetic preset.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub path: Option<PathBuf>,
    pub label_column: Option<String>,
    pub synthetic: Option<String>,
    pub seed: Option<u64>,
    pub id: Option<String>,
    #[serde(default)]
    pub missing: MissingPolicy,
}

fn default_backends() -> Vec<BackendSpec> {
    vec![BackendSpec::knn("knn", 5)]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_backends")]
    pub backends: Vec<BackendSpec>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

pub const SYNTHETIC_PRESETS: [&str; 4] = [
    "binary_balanced",
    "ten_class_balanced",
    "imbalanced_95_5",
    "informative_plus_noise",
];

impl RunConfig {
    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for entry in &mut cfg.datasets {
            if let Some(p) = &entry.path {
                if p.is_relative() {
                    entry.path = Some(base.join(p));
                }
            }
        }
        if let Some(out) = &cfg.output_dir {
            if out.is_relative() {
                cfg.output_dir = Some(base.join(out));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.datasets.is_empty() {
            return Err(Failure::Usage("config lists no datasets".into()));
        }
        for entry in &self.datasets {
            entry.validate()?;
        }
        self.grid.validate()?;
        if self.backends.is_empty() {
            return Err(Failure::Usage("config lists no backends".into()));
        }
        for b in &self.backends {
            b.validate()?;
        }
        Ok(())
    }
}

impl DatasetEntry {
    fn validate(&self) -> Result<(), Failure> {
        match (&self.path, &self.synthetic) {
            (Some(_), None) => {
                if self.label_column.is_none() {
                    return Err(Failure::Usage("a CSV dataset needs `label_column`".into()));
                }
                if self.seed.is_some() {
                    return Err(Failure::Usage("`seed` applies only to synthetic datasets".into()));
                }
                Ok(())
            }
            (None, Some(name)) => {
                if !SYNTHETIC_PRESETS.contains(&name.as_str()) {
                    return Err(Failure::Usage(format!(
                        "unknown synthetic preset `{name}` (expected one of {})",
                        SYNTHETIC_PRESETS.join(", ")
                    )));
                }
                if self.label_column.is_some() {
                    return Err(Failure::Usage("`label_column` applies only to CSV datasets".into()));
                }
                Ok(())
            }
            _ => Err(Failure::Usage(
                "each dataset needs exactly one of `path` and `synthetic`".into(),
            )),
        }
    }

    pub fn load(&self) -> Result<Dataset, Failure> {
        let mut ds = match (&self.path, &self.synthetic) {
            (Some(path), _) => load_csv(path, self.label_column.as_deref().unwrap_or_default(), self.missing)?,
            (None, Some(name)) => {
                let seed = self.seed.unwrap_or(0);
                let spec = match name.as_str() {
                    "binary_balanced" => synthetic::binary_balanced(seed),
                    "ten_class_balanced" => synthetic::ten_class_balanced(seed),
                    "imbalanced_95_5" => synthetic::imbalanced_95_5(seed),
                    _ => synthetic::informative_plus_noise(seed),
                };
                spec.generate()?
            }
            (None, None) => unreachable!("validated"),
        };
        if let Some(id) = &self.id {
            ds.set_id(id.clone());
        }
        Ok(ds)
    }
}
