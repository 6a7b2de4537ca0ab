//! Persistence of regret traces as CSV (`t,mean_regret,stderr`) or JSON
//! (`{config, known_suboptimal, run_count, t, mean, stderr}`).
//!
//! Floats are written in Rust's shortest round-trip form, so both formats
//! read back bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, RegretTrace};

pub const CSV_HEADER: &str = "t,mean_regret,stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

impl TraceFormat {
    /// Picks the format from the file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => TraceFormat::Json,
            _ => TraceFormat::Csv,
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "json" => Ok(TraceFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown trace format {other:?}"))),
        }
    }
}

/// A finished experiment: its configuration and aggregated trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub trace: RegretTrace,
}

#[derive(Serialize, Deserialize)]
struct JsonTrace {
    config: ExperimentConfig,
    known_suboptimal: bool,
    run_count: u64,
    t: Vec<u64>,
    mean: Vec<f64>,
    stderr: Vec<f64>,
}

pub fn trace_to_csv(trace: &RegretTrace) -> String {
    let mut out = String::with_capacity(32 * trace.len() + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..trace.len() {
        writeln!(out, "{},{},{}", trace.t_points[i], trace.mean_regret[i], trace.stderr[i])
            .expect("writing to a String cannot fail");
    }
    out
}

pub fn result_to_json(result: &ExperimentResult) -> String {
    let doc = JsonTrace {
        known_suboptimal: result.config.policy.known_suboptimal(),
        config: result.config.clone(),
        run_count: result.trace.run_count,
        t: result.trace.t_points.clone(),
        mean: result.trace.mean_regret.clone(),
        stderr: result.trace.stderr.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("trace serialization cannot fail")
}

pub fn write_trace(result: &ExperimentResult, path: &Path, format: TraceFormat) -> Result<()> {
    let body = match format {
        TraceFormat::Csv => trace_to_csv(&result.trace),
        TraceFormat::Json => result_to_json(result),
    };
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a CSV trace. The file does not carry the run count, so the caller supplies it.
pub fn read_trace_csv(path: &Path, run_count: u64) -> Result<RegretTrace> {
    let text = read_text(path)?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(bad(format!("expected header {CSV_HEADER:?}, found {other:?}"))),
    }
    let mut trace = RegretTrace {
        t_points: Vec::new(),
        mean_regret: Vec::new(),
        stderr: Vec::new(),
        run_count,
    };
    for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("line {}: expected 3 fields", lineno + 2)));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", lineno + 2)));
        trace
            .t_points
            .push(fields[0].parse().map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?);
        trace.mean_regret.push(parse_f(fields[1])?);
        trace.stderr.push(parse_f(fields[2])?);
    }
    Ok(trace)
}

pub fn read_result_json(path: &Path) -> Result<ExperimentResult> {
    let text = read_text(path)?;
    let doc: JsonTrace = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(ExperimentResult {
        config: doc.config,
        trace: RegretTrace {
            t_points: doc.t,
            mean_regret: doc.mean,
            stderr: doc.stderr,
            run_count: doc.run_count,
        },
    })
}
