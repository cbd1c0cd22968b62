//! Deterministic table export: CSV and JSON with a stable column order and
//! floats at 17 significant digits, so identical inputs produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => float_repr(*v),
            Cell::Bool(v) => v.to_string(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Str(s) => format!("{:?}", s),
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => {
                if v.is_finite() {
                    float_repr(*v)
                } else {
                    // JSON has no infinities; stringify them
                    format!("{:?}", v.to_string())
                }
            }
            Cell::Bool(v) => v.to_string(),
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
fn float_repr(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("[\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str("  {");
            for (j, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{:?}: {}", col, cell.json());
            }
            out.push('}');
            if i + 1 < self.rows.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("]\n");
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Write to `path` or stdout.
    pub fn emit(&self, path: Option<&Path>, format: Format) -> Result<()> {
        let body = self.render(format);
        match path {
            Some(p) => {
                std::fs::write(p, body).with_context(|| format!("writing {}", p.display()))?
            }
            None => print!("{body}"),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => anyhow::bail!("unknown format {other:?} (expected csv or json)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_deterministic_and_full_precision() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![Cell::UInt(5), Cell::Float(1.0 / 3.0)]);
        let once = t.to_csv();
        let twice = t.to_csv();
        assert_eq!(once, twice);
        assert!(once.contains("3.3333333333333331e-1"), "{once}");
        let parsed: f64 = once
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(parsed, 1.0 / 3.0);
    }

    #[test]
    fn json_round_trips_through_serde() {
        let mut t = Table::new(vec!["q", "v"]);
        t.push(vec![Cell::UInt(101), Cell::Float(0.123456789)]);
        t.push(vec![Cell::UInt(7), Cell::Float(f64::NEG_INFINITY)]);
        let s = t.to_json();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert_eq!(v[0]["q"], 101);
    }
}
