//! Tables and their CSV/JSON rendering.
//!
//! CSV layout: a `# spec_hash=<16 hex>` line, a row of column names, the
//! data rows, then any `# ` note lines. Reals are written with 17
//! significant digits (`{:.16e}`); missing values are empty fields.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use qrandlab::serial::{StateDocument, TestDocument};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything a command's output depends on. Its hash tags every artifact.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ExperimentSpec {
    pub command: String,
    pub state: Option<StateDocument>,
    pub test: Option<TestDocument>,
    pub params: BTreeMap<String, Value>,
    pub seed: Option<u64>,
}

impl ExperimentSpec {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes)
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Real(x) => json!(x),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn to_csv(&self, hash: &str) -> String {
        let mut out = format!("# spec_hash={hash}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        out
    }

    pub fn to_json(&self, hash: &str) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect(),
                )
            })
            .collect();
        json!({ "spec_hash": hash, "rows": rows, "notes": self.notes })
    }

    pub fn render(&self, format: Format, hash: &str) -> String {
        match format {
            Format::Csv => self.to_csv(hash),
            Format::Json => pretty(&self.to_json(hash)),
        }
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
