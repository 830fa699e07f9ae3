//! CSV and JSON-lines writers.
//!
//! Floats are written with 17 significant digits so that every value
//! round-trips exactly; positions are written as decimal integers.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hausdorff::PartitionLevel;
use crate::propagate::{angle_diff, PruferTrace};

/// `x` with 17 significant digits, `inf`/`-inf`/`NaN` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Numerical(format!("write failed: {e}"))
}

/// Write a header and rows as CSV.
pub fn write_csv<W: Write, I>(out: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Domain(format!("row has {} cells, header {}", row.len(), header.len())));
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Columns of a trace export, in order.
pub const TRACE_COLUMNS: [&str; 8] = ["k", "n", "x", "coupling", "thetabar", "theta_after", "ln_r_after", "increment"];

pub fn trace_header(with_oracle: bool) -> Vec<&'static str> {
    let mut header = TRACE_COLUMNS.to_vec();
    if with_oracle {
        header.push("oracle_diff");
    }
    header
}

/// One row per barrier. With `oracle_diff`, a final column holds the
/// per-barrier distance to a reference trace.
pub fn trace_rows(trace: &PruferTrace, oracle_diff: Option<&[f64]>) -> Vec<Vec<String>> {
    trace
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![
                fmt_f64(trace.k),
                r.n.to_string(),
                r.x.to_string(),
                fmt_f64(r.coupling),
                fmt_f64(r.thetabar_at),
                fmt_f64(r.theta_after),
                fmt_f64(r.ln_r_after),
                fmt_f64(r.increment()),
            ];
            if let Some(d) = oracle_diff {
                row.push(d.get(i).map_or_else(|| "NaN".to_string(), |x| fmt_f64(*x)));
            }
            row
        })
        .collect()
}

pub fn write_trace_csv<W: Write>(out: W, trace: &PruferTrace, oracle_diff: Option<&[f64]>) -> Result<()> {
    write_csv(out, &trace_header(oracle_diff.is_some()), trace_rows(trace, oracle_diff))
}

/// Per-barrier distance between two traces of the same spec: the largest of
/// the `θ̄`, `θ(x_n + 1)` and `ln R(x_n + 1)` discrepancies.
pub fn per_barrier_diff(a: &PruferTrace, b: &PruferTrace) -> Vec<f64> {
    a.records
        .iter()
        .zip(&b.records)
        .map(|(x, y)| {
            angle_diff(x.thetabar_at, y.thetabar_at)
                .abs()
                .max(angle_diff(x.theta_after, y.theta_after).abs())
                .max((x.ln_r_after - y.ln_r_after).abs())
        })
        .collect()
}

/// One row per zero: level, index, `k_{n,j}` and the following interval length.
pub fn partition_rows(level: &PartitionLevel) -> Vec<Vec<String>> {
    let lengths = level.lengths();
    level
        .zeros
        .iter()
        .enumerate()
        .map(|(j, z)| {
            vec![level.n.to_string(), j.to_string(), fmt_f64(*z), lengths.get(j).map_or_else(String::new, |l| fmt_f64(*l))]
        })
        .collect()
}

pub const PARTITION_COLUMNS: [&str; 4] = ["n", "j", "k", "length"];

/// Zeros and interval lengths of a partition level.
pub fn write_partition_csv<W: Write>(out: W, level: &PartitionLevel) -> Result<()> {
    write_csv(out, &PARTITION_COLUMNS, partition_rows(level))
}

/// One JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
