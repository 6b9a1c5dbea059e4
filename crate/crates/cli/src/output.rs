//! Report writers. Floats are printed with 12 significant digits in their
//! shortest form so that output is stable across platforms and thread counts.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde_json::{Map, Value};

use crate::error::CliError;

/// `v` rounded to 12 significant digits, printed in the shortest form that
/// reads back to the rounded value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(v);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if !(1e-6..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

pub fn round12(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    let r: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// JSON number rounded to 12 digits; non-finite values become strings.
pub fn num(v: f64) -> Value {
    match serde_json::Number::from_f64(round12(v)) {
        Some(n) => Value::Number(n),
        None => Value::String(fmt_f64(v)),
    }
}

/// `{mean, sigma, lo, hi}` with a 3σ interval.
pub fn interval(mean: f64, sigma: f64) -> Value {
    let mut m = Map::new();
    m.insert("mean".into(), num(mean));
    m.insert("sigma".into(), num(sigma));
    m.insert("lo".into(), num(mean - 3.0 * sigma));
    m.insert("hi".into(), num(mean + 3.0 * sigma));
    Value::Object(m)
}

/// Rows of already formatted cells under a fixed header.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

pub struct Report {
    pub experiment: String,
    pub table: Table,
    pub summary: Value,
}

/// Writes `<experiment>.csv` and `<experiment>.json` into `out`, or the CSV
/// to stdout and the summary to stderr.
pub fn emit(report: &Report, out: Option<&PathBuf>) -> Result<(), CliError> {
    let csv = report.table.to_bytes()?;
    let mut json =
        serde_json::to_string_pretty(&report.summary).map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let csv_path = dir.join(format!("{}.csv", report.experiment));
            let json_path = dir.join(format!("{}.json", report.experiment));
            fs::write(&csv_path, csv)
                .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
            fs::write(&json_path, json)
                .map_err(|e| CliError::Io(format!("{}: {e}", json_path.display())))?;
        }
        None => {
            std::io::stdout().lock().write_all(&csv)?;
            std::io::stderr().lock().write_all(json.as_bytes())?;
        }
    }
    Ok(())
}
