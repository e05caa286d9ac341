//! CSV output for campaign records and splitting traces.
//!
//! Floats are written with 17 significant digits so that they read back to
//! the same `f64`. Missing values are empty cells.

use std::io::Write;
use std::path::Path;

use crate::bellman::TraceRow;
use crate::error::{Error, Result};
use crate::harness::campaign::CampaignRecord;
use crate::steps::Interval;

/// Campaign CSV columns, in order. `runtime_ms` is last and is the only
/// column that differs between runs of the same configuration.
pub const RECORD_COLUMNS: [&str; 15] = [
    "sample_id",
    "seed",
    "check",
    "weight",
    "detail",
    "lhs",
    "rhs",
    "slack",
    "tol",
    "witness_lhs",
    "witness_rhs",
    "oracle_lhs",
    "oracle_rhs",
    "status",
    "runtime_ms",
];

/// Trace CSV columns, in order.
pub const TRACE_COLUMNS: [&str; 8] = ["depth", "node_index", "a", "b", "t", "g_value", "psi_left", "psi_right"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_interval(j: Option<Interval>) -> String {
    j.map(|j| format!("{} {}", fmt_f64(j.a()), fmt_f64(j.b()))).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

pub fn write_records<W: Write>(out: W, records: &[CampaignRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.sample_id.to_string(),
            r.seed.to_string(),
            r.check.name().to_string(),
            r.weight.clone(),
            r.detail.clone(),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.slack),
            fmt_f64(r.tol),
            fmt_interval(r.witness_lhs),
            fmt_interval(r.witness_rhs),
            fmt_opt(r.oracle.map(|o| o.0)),
            fmt_opt(r.oracle.map(|o| o.1)),
            r.status.as_str().to_string(),
            format!("{:.3}", r.runtime_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(format!("csv: {e}")))
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.depth.to_string(),
            r.node_index.to_string(),
            fmt_f64(r.a),
            fmt_f64(r.b),
            fmt_opt(r.t),
            fmt_f64(r.g_value),
            fmt_opt(r.psi_left),
            fmt_opt(r.psi_right),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(format!("csv: {e}")))
}

/// Writes to `path`, reporting I/O failures with the path.
pub fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
