//! Numbers in reports carry an error estimate or an "exact" tag.

use num_complex::Complex64;
use serde_json::{json, Value};

pub fn est(value: f64, error: f64) -> Value {
    json!({ "value": value, "error": error })
}

pub fn exact(value: impl Into<Value>) -> Value {
    json!({ "value": value.into(), "exact": true })
}

pub fn cest(z: Complex64, error: f64) -> Value {
    json!({ "re": z.re, "im": z.im, "error": error })
}

pub fn cexact(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im, "exact": true })
}

/// Error column entry.
pub fn err_cell(error: Option<f64>) -> String {
    match error {
        Some(e) => num(e),
        None => "exact".into(),
    }
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

/// Result of one command before it is written to disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
