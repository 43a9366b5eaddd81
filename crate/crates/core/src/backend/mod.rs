//! Classifiers that consume a compact context: a built-in k-NN reference and
//! a client for external model bridges.

mod bridge;
mod knn;

use std::time::{Duration, Instant};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::summarize::CompactContext;

pub use bridge::{encode_request, parse_response, run_bridge, BridgeError};
pub use knn::predict_knn;

fn default_k() -> usize {
    5
}

fn default_timeout() -> f64 {
    600.0
}

/// A named classifier backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    Knn {
        id: String,
        #[serde(default = "default_k")]
        k: usize,
    },
    Bridge {
        id: String,
        /// Program followed by its arguments.
        command: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_s: f64,
        /// Forwarded untouched as the request's `config` object.
        #[serde(default)]
        config: Map<String, Value>,
    },
}

impl BackendSpec {
    pub fn knn(id: impl Into<String>, k: usize) -> Self {
        BackendSpec::Knn { id: id.into(), k }
    }

    pub fn id(&self) -> &str {
        match self {
            BackendSpec::Knn { id, .. } | BackendSpec::Bridge { id, .. } => id,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id().is_empty() || self.id().contains(',') {
            return Err(Error::param(format!("invalid backend id `{}`", self.id())));
        }
        match self {
            BackendSpec::Knn { k, .. } if *k == 0 => Err(Error::param("knn backend needs k >= 1")),
            BackendSpec::Bridge { command, .. } if command.is_empty() || command[0].is_empty() => {
                Err(Error::param(format!("bridge backend `{}` has an empty command", self.id())))
            }
            BackendSpec::Bridge { timeout_s, .. } if !(timeout_s.is_finite() && *timeout_s > 0.0) => {
                Err(Error::param(format!("bridge backend `{}` needs a positive timeout", self.id())))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    pub elapsed: Duration,
}

/// Predicts labels for `test_rows`, which must already be in the context's
/// reduced space.
pub fn predict(spec: &BackendSpec, ctx: &CompactContext, test_rows: ArrayView2<'_, f64>) -> Result<Prediction> {
    let start = Instant::now();
    let labels = match spec {
        BackendSpec::Knn { k, .. } => predict_knn(ctx.x.view(), &ctx.y, ctx.num_classes, test_rows, *k)?,
        BackendSpec::Bridge {
            command,
            timeout_s,
            config,
            ..
        } => predict_bridge(ctx, test_rows, command, Duration::from_secs_f64(*timeout_s), config)?,
    };
    Ok(Prediction {
        labels,
        elapsed: start.elapsed(),
    })
}

/// Sends the context and test rows to an external bridge process.
pub fn predict_bridge(
    ctx: &CompactContext,
    test_rows: ArrayView2<'_, f64>,
    command: &[String],
    timeout: Duration,
    config: &Map<String, Value>,
) -> std::result::Result<Vec<usize>, BridgeError> {
    let line = encode_request(ctx.num_classes, ctx.x.view(), &ctx.y, test_rows, config)?;
    run_bridge(command, &line, test_rows.nrows(), ctx.num_classes, timeout)
}

/// Fraction of exact matches.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::data(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::data("accuracy of an empty prediction"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Recall of one class: correct predictions among rows whose truth is `class`.
/// `None` when the class does not occur in `truth`.
pub fn class_recall(predicted: &[usize], truth: &[usize], class: usize) -> Option<f64> {
    let (hit, total) = predicted
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t == class)
        .fold((0usize, 0usize), |(h, n), (&p, _)| (h + usize::from(p == class), n + 1));
    (total > 0).then(|| hit as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn recall_counts_only_the_class() {
        assert_eq!(class_recall(&[1, 0, 1, 1], &[1, 1, 0, 1], 1), Some(2.0 / 3.0));
        assert_eq!(class_recall(&[0, 0], &[0, 0], 1), None);
    }

    #[test]
    fn spec_parsing() {
        let s: BackendSpec = serde_json::from_str(r#"{"kind":"knn","id":"knn5"}"#).unwrap();
        assert_eq!(s, BackendSpec::knn("knn5", 5));
        let b: BackendSpec = serde_json::from_str(
            r#"{"kind":"bridge","id":"tp","command":["python3","adapter.py","tabpfn"],"config":{"n":1}}"#,
        )
        .unwrap();
        assert!(matches!(&b, BackendSpec::Bridge { timeout_s, .. } if *timeout_s == 600.0));
        b.validate().unwrap();
        assert!(serde_json::from_str::<BackendSpec>(r#"{"kind":"knn","id":"a","kk":3}"#).is_err());
        assert!(BackendSpec::knn("x", 0).validate().is_err());
    }
}
