//! The JSON envelope every command emits, plus the flat table used for CSV.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// Bumped whenever a payload changes shape; the files under `schemas/` track it.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config_echo: BTreeMap<String, Value>,
    pub payload: Value,
    pub warnings: Vec<String>,
}

#[derive(Debug, Default)]
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

    pub fn to_csv(&self) -> csv::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

/// What a command hands back to `main` for rendering.
pub struct Outcome {
    pub report: RunReport,
    pub table: Table,
}

impl Outcome {
    pub fn render_json(&self) -> serde_json::Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(&self.report)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

pub fn num(v: f64) -> String {
    v.to_string()
}

/// Empty cell for undefined values.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// The serde spelling of a unit-like enum, e.g. `Check::NotAsserted` -> `not_asserted`.
pub fn tag<S: Serialize>(v: &S) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}
