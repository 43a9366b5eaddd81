//! Client side of the line-delimited JSON bridge to external models.
//!
//! One child process per request: the request is written as a single line on
//! the child's stdin, the first line of its stdout is the response, then the
//! child is expected to exit.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use ndarray::ArrayView2;
use serde::ser::{Serialize, SerializeSeq, Serializer};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BridgeError {
    #[error("failed to launch bridge `{command}`: {reason}")]
    Launch { command: String, reason: String },
    #[error("bridge timed out after {0:?}")]
    Timeout(Duration),
    #[error("bridge i/o failure: {0}")]
    Io(String),
    #[error("malformed bridge response: {0}")]
    Malformed(String),
    #[error("bridge returned label {label} but there are {num_classes} classes")]
    LabelOutOfRange { label: u64, num_classes: usize },
    #[error("bridge reported an error: {0}")]
    Reported(String),
    #[error("request not encodable: {0}")]
    InvalidRequest(String),
}

struct Rows<'a>(ArrayView2<'a, f64>);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.nrows()))?;
        for row in self.0.rows() {
            seq.serialize_element(&row.iter().collect::<Vec<_>>())?;
        }
        seq.end()
    }
}

#[derive(serde::Serialize)]
struct PredictRequest<'a> {
    op: &'static str,
    num_classes: usize,
    train_x: Rows<'a>,
    train_y: &'a [usize],
    test_x: Rows<'a>,
    config: &'a Map<String, Value>,
}

/// Encodes one predict request line (without the trailing newline).
pub fn encode_request(
    num_classes: usize,
    train_x: ArrayView2<'_, f64>,
    train_y: &[usize],
    test_x: ArrayView2<'_, f64>,
    config: &Map<String, Value>,
) -> Result<String, BridgeError> {
    if train_x.iter().chain(test_x.iter()).any(|v| !v.is_finite()) {
        return Err(BridgeError::InvalidRequest("non-finite feature value".into()));
    }
    let req = PredictRequest {
        op: "predict",
        num_classes,
        train_x: Rows(train_x),
        train_y,
        test_x: Rows(test_x),
        config,
    };
    serde_json::to_string(&req).map_err(|e| BridgeError::InvalidRequest(e.to_string()))
}

/// Parses a response line and checks it against the request shape.
pub fn parse_response(line: &str, n_test: usize, num_classes: usize) -> Result<Vec<usize>, BridgeError> {
    let value: Value = serde_json::from_str(line.trim()).map_err(|e| BridgeError::Malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| BridgeError::Malformed("response is not a JSON object".into()))?;
    if let Some(err) = obj.get("error") {
        let text = err.as_str().map_or_else(|| err.to_string(), str::to_string);
        return Err(BridgeError::Reported(text));
    }
    let labels = obj
        .get("labels")
        .and_then(Value::as_array)
        .ok_or_else(|| BridgeError::Malformed("missing `labels` array".into()))?;
    if labels.len() != n_test {
        return Err(BridgeError::Malformed(format!(
            "expected {n_test} labels, got {}",
            labels.len()
        )));
    }
    labels
        .iter()
        .map(|v| {
            let label = v
                .as_u64()
                .ok_or_else(|| BridgeError::Malformed(format!("label `{v}` is not a non-negative integer")))?;
            if label >= num_classes as u64 {
                return Err(BridgeError::LabelOutOfRange { label, num_classes });
            }
            Ok(label as usize)
        })
        .collect()
}

/// Runs one request against `command` and returns the predicted labels.
/// The child is killed if no response arrives within `timeout`.
pub fn run_bridge(
    command: &[String],
    request_line: &str,
    n_test: usize,
    num_classes: usize,
    timeout: Duration,
) -> Result<Vec<usize>, BridgeError> {
    let deadline = Instant::now() + timeout;
    let (program, args) = command.split_first().ok_or_else(|| BridgeError::Launch {
        command: String::new(),
        reason: "empty command".into(),
    })?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| BridgeError::Launch {
            command: command.join(" "),
            reason: e.to_string(),
        })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let payload = format!("{request_line}\n");
    // the child may exit before reading everything; a broken pipe here shows
    // up as a missing or malformed response instead
    thread::spawn(move || {
        let _ = stdin.write_all(payload.as_bytes());
    });

    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut line = String::new();
        let res = BufReader::new(stdout).read_line(&mut line).map(|_| line);
        let _ = tx.send(res);
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let (etx, erx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.by_ref().take(64 * 1024).read_to_end(&mut buf);
        let _ = etx.send(String::from_utf8_lossy(&buf).into_owned());
    });

    let remaining = deadline.saturating_duration_since(Instant::now());
    let line = match rx.recv_timeout(remaining) {
        Ok(Ok(line)) => line,
        Ok(Err(e)) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(BridgeError::Io(e.to_string()));
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(BridgeError::Timeout(timeout));
        }
    };

    // give the child until the deadline to exit on its own
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(2)),
            _ => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
        }
    };

    if line.trim().is_empty() {
        let stderr = erx.recv_timeout(Duration::from_millis(200)).unwrap_or_default();
        let status = status.map_or_else(|| "killed".to_string(), |s| s.to_string());
        let tail: String = stderr.trim().lines().last().unwrap_or("").chars().take(200).collect();
        return Err(BridgeError::Malformed(format!(
            "no response line (exit: {status}){}",
            if tail.is_empty() { String::new() } else { format!("; stderr: {tail}") }
        )));
    }
    parse_response(&line, n_test, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn request_layout_is_exact() {
        let tx = array![[1.5, -2.0], [0.1, 3.0]];
        let te = array![[0.0, 1e-300]];
        let mut cfg = Map::new();
        cfg.insert("depth".into(), Value::from(6));
        let line = encode_request(2, tx.view(), &[0, 1], te.view(), &cfg).unwrap();
        assert_eq!(
            line,
            r#"{"op":"predict","num_classes":2,"train_x":[[1.5,-2.0],[0.1,3.0]],"train_y":[0,1],"test_x":[[0.0,1e-300]],"config":{"depth":6}}"#
        );
    }

    #[test]
    fn floats_round_trip_bit_exactly() {
        let vals = [0.1 + 0.2, std::f64::consts::PI, -1.0 / 3.0, 5e-324, 1.7976931348623157e308];
        let tx = ndarray::Array2::from_shape_vec((1, 5), vals.to_vec()).unwrap();
        let line = encode_request(2, tx.view(), &[0], tx.view(), &Map::new()).unwrap();
        let v: Value = serde_json::from_str(&line).unwrap();
        let back: Vec<f64> = v["train_x"][0].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        for (a, b) in vals.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn non_finite_request_rejected() {
        let tx = array![[f64::NAN]];
        assert!(matches!(
            encode_request(2, tx.view(), &[0], tx.view(), &Map::new()),
            Err(BridgeError::InvalidRequest(_))
        ));
    }

    #[test]
    fn response_checks() {
        assert_eq!(parse_response(r#"{"labels":[0,1,1]}"#, 3, 2).unwrap(), vec![0, 1, 1]);
        assert_eq!(
            parse_response(r#"{"labels":[0,1],"model_version":"x"}"#, 2, 2).unwrap(),
            vec![0, 1]
        );
        assert!(matches!(parse_response(r#"{"labels":[0,1]}"#, 3, 2), Err(BridgeError::Malformed(_))));
        assert!(matches!(parse_response(r#"{"labels":[0,1.5]}"#, 2, 2), Err(BridgeError::Malformed(_))));
        assert!(matches!(parse_response(r#"{"labels":[0,-1]}"#, 2, 2), Err(BridgeError::Malformed(_))));
        assert_eq!(
            parse_response(r#"{"labels":[0,2]}"#, 2, 2),
            Err(BridgeError::LabelOutOfRange { label: 2, num_classes: 2 })
        );
        assert_eq!(
            parse_response(r#"{"error":"no tabpfn"}"#, 2, 2),
            Err(BridgeError::Reported("no tabpfn".into()))
        );
        assert!(matches!(parse_response("not json", 2, 2), Err(BridgeError::Malformed(_))));
    }

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn shell_double_round_trip() {
        let labels = run_bridge(
            &sh(r#"read line; echo '{"labels":[0,0,0]}'"#),
            r#"{"op":"predict"}"#,
            3,
            2,
            Duration::from_secs(10),
        )
        .unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
    }

    #[test]
    fn short_response_is_malformed() {
        let err = run_bridge(
            &sh(r#"read line; echo '{"labels":[0,0]}'"#),
            "{}",
            3,
            2,
            Duration::from_secs(10),
        )
        .unwrap_err();
        assert!(matches!(err, BridgeError::Malformed(_)), "{err}");
    }

    #[test]
    fn silent_exit_is_malformed() {
        let err = run_bridge(&sh("echo oops >&2; exit 4"), "{}", 1, 2, Duration::from_secs(10)).unwrap_err();
        let BridgeError::Malformed(msg) = err else {
            panic!("expected malformed, got {err:?}");
        };
        assert!(msg.contains("oops"), "{msg}");
    }

    #[test]
    fn hung_bridge_times_out() {
        let start = Instant::now();
        let err = run_bridge(&sh("exec sleep 30"), "{}", 1, 2, Duration::from_millis(300)).unwrap_err();
        assert_eq!(err, BridgeError::Timeout(Duration::from_millis(300)));
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn missing_program_is_a_launch_error() {
        let err = run_bridge(
            &["/nonexistent/bridge-binary".to_string()],
            "{}",
            1,
            2,
            Duration::from_secs(1),
        )
        .unwrap_err();
        assert!(matches!(err, BridgeError::Launch { .. }));
    }
}
