//! Output documents and their CSV / JSON encodings.
//!
//! Every float is rounded to 10 significant digits before it is stored, so
//! the encoded bytes depend only on the rounded report and a JSON document
//! parses back to exactly the value that was emitted.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Bool(bool),
    Num(f64),
    Text(String),
}

impl Cell {
    /// A rounded number; non-finite values become `Null`.
    pub fn num(x: f64) -> Self {
        if x.is_finite() {
            Cell::Num(round_sig(x))
        } else {
            Cell::Null
        }
    }

    fn csv_field(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Bool(b) => b.to_string(),
            Cell::Num(x) => format_num(*x),
            Cell::Text(t) => t.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(t: &str) -> Self {
        Cell::Text(t.to_string())
    }
}

/// Rounds to 10 significant decimal digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.9e}").parse().unwrap_or(x)
}

fn format_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    pub version: String,
    pub seed: u64,
    /// The run configuration that reproduces this document.
    pub config: serde_json::Value,
    pub summary: BTreeMap<String, Cell>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Document {
    pub fn new(config: serde_json::Value, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            summary: BTreeMap::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn columns<S: AsRef<str>>(&mut self, cols: &[S]) {
        self.columns = cols.iter().map(|c| c.as_ref().to_string()).collect();
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    /// Metadata and summary go into `#` comment lines ahead of the header.
    /// A document without a table is written as a single row of its summary.
    pub fn to_csv(&self) -> std::io::Result<String> {
        let mut out = Vec::new();
        writeln!(out, "# fraclab {}", self.version)?;
        writeln!(out, "# schema_version: {}", self.schema_version)?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "# config: {}", self.config)?;
        let (columns, rows) = if self.columns.is_empty() {
            let cols: Vec<String> = self.summary.keys().cloned().collect();
            let row: Vec<Cell> = self.summary.values().cloned().collect();
            (cols, if row.is_empty() { vec![] } else { vec![row] })
        } else {
            for (k, v) in &self.summary {
                writeln!(out, "# {k}: {}", v.csv_field())?;
            }
            (self.columns.clone(), self.rows.clone())
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&columns)?;
        for row in &rows {
            w.write_record(row.iter().map(Cell::csv_field))?;
        }
        w.into_inner().map_err(|e| e.into_error()).map(|b| String::from_utf8(b).expect("utf-8 output"))
    }
}
