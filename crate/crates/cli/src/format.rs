//! Tabular and report formats.

use std::fmt::Write as _;

use qellip::experiment::CountRecord;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const COUNTS_HEADER: [&str; 4] = ["theta1_deg", "theta2_deg", "dwell_s", "counts"];
pub const FRINGE_HEADER: [&str; 2] = ["theta1_deg", "expected_rate"];

/// One row of a counts file, angles in degrees. Counts are real so that
/// noiseless means and pre-subtracted rates can be fed back in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsRow {
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub dwell_s: f64,
    pub counts: f64,
}

/// Counts CSV for simulated records, rows in plan order, LF endings.
pub fn write_counts(theta1_deg: &[f64], theta2_deg: f64, records: &[CountRecord<f64>]) -> String {
    let mut out = COUNTS_HEADER.join(",");
    out.push('\n');
    for (t1, r) in theta1_deg.iter().zip(records) {
        writeln!(out, "{t1:.6},{theta2_deg:.6},{:.6},{}", r.duration, r.counts).unwrap();
    }
    out
}

pub fn write_fringe(rows: &[(f64, f64)]) -> String {
    let mut out = FRINGE_HEADER.join(",");
    out.push('\n');
    for (t, rate) in rows {
        writeln!(out, "{t:.6},{rate:.6}").unwrap();
    }
    out
}

pub fn read_counts(text: &str) -> CliResult<Vec<CountsRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::Schema(format!("unreadable header: {e}")))?;
    if header.iter().ne(COUNTS_HEADER) {
        return Err(CliError::Schema(format!(
            "header must be `{}`, found `{}`",
            COUNTS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Schema(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut vals = [0.0; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = rec[k]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Schema(format!("line {line}, column {}: `{}` is not a number", COUNTS_HEADER[k], &rec[k])))?;
        }
        let [theta1_deg, theta2_deg, dwell_s, counts] = vals;
        if dwell_s <= 0.0 {
            return Err(CliError::Schema(format!("line {line}, column dwell_s: must be positive")));
        }
        if counts < 0.0 {
            return Err(CliError::Schema(format!("line {line}, column counts: must be non-negative")));
        }
        rows.push(CountsRow {
            theta1_deg,
            theta2_deg,
            dwell_s,
            counts,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Schema("no data rows".into()));
    }
    Ok(rows)
}

/// `x` rounded to 9 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}
