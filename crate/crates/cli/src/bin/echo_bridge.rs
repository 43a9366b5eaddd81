//! Reference bridge process. Reads one predict request per line on stdin and
//! answers each with the label of the nearest context row (ties to the
//! earlier row). Useful for checking bridge plumbing without a model.

use std::io::{self, BufRead, Write};

use serde::Deserialize;
use serde_json::json;

#[derive(Deserialize)]
struct Request {
    op: String,
    num_classes: usize,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<usize>,
    test_x: Vec<Vec<f64>>,
}

fn nearest(train_x: &[Vec<f64>], row: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, t) in train_x.iter().enumerate() {
        let d: f64 = t.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn answer(line: &str) -> serde_json::Value {
    let req: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => return json!({ "error": format!("bad request: {e}") }),
    };
    if req.op != "predict" {
        return json!({ "error": format!("unsupported op `{}`", req.op) });
    }
    if req.train_x.is_empty() || req.train_x.len() != req.train_y.len() {
        return json!({ "error": "context rows and labels disagree" });
    }
    if req.train_y.iter().any(|&y| y >= req.num_classes) {
        return json!({ "error": "context label out of range" });
    }
    let labels: Vec<usize> = req.test_x.iter().map(|r| req.train_y[nearest(&req.train_x, r)]).collect();
    json!({ "labels": labels, "model": "echo-1nn" })
}

fn main() -> io::Result<()> {
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(out, "{}", answer(&line))?;
        out.flush()?;
    }
    Ok(())
}
