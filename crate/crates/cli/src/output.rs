//! Tables and their CSV / JSON renderings.
//!
//! CSV output starts with `#` comment lines carrying the command, the schema
//! version and the fully resolved configuration as one JSON line, followed by
//! a header row. JSON output is a single object with the same information.

use serde::ser::{Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_u64(*v),
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Float(v) => s.serialize_str(&v.to_string()),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Empty => s.serialize_none(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(u64::from(v))
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

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }
}

/// The result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub command: String,
    /// Resolved parameters, seeds included.
    pub config: Value,
    pub table: Table,
    /// Overall verdict for validation runs.
    pub passed: Option<bool>,
}

impl Output {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> Result<String, CliError> {
        let mut text = format!(
            "# nqkd {}\n# schema_version: {SCHEMA_VERSION}\n# config: {}\n",
            self.command,
            serde_json::to_string(&self.config).map_err(|e| CliError::Output(e.to_string()))?
        );
        if let Some(p) = self.passed {
            text.push_str(&format!("# passed: {p}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&self.table.columns).map_err(io)?;
        for row in &self.table.rows {
            w.write_record(row.iter().map(Cell::csv_text)).map_err(io)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        text.push_str(&String::from_utf8(body).map_err(|e| CliError::Output(e.to_string()))?);
        Ok(text)
    }

    fn render_json(&self) -> Result<String, CliError> {
        let rows: Vec<Value> = self
            .table
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, v) in self.table.columns.iter().zip(row) {
                    m.insert((*c).to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
                }
                Value::Object(m)
            })
            .collect();
        let mut doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "columns": self.table.columns,
            "rows": rows,
        });
        if let Some(p) = self.passed {
            doc["passed"] = json!(p);
        }
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}
