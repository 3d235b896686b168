//! Result tables and their CSV/JSON renderings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    pub fn render(&self, precision: usize) -> String {
        match self {
            Cell::Float(v) => format_float(*v, precision),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self, precision: usize) -> Value {
        match self {
            Cell::Float(v) => format_float(*v, precision)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Scientific notation with `precision` significant digits, e.g.
/// `2.50000000000e-1` at 12.
pub fn format_float(v: f64, precision: usize) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let decimals = precision.saturating_sub(1);
    format!("{v:.decimals$e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Appends another table with the same columns.
    pub fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
        for (k, v) in other.metadata {
            self.metadata.entry(k).or_insert(v);
        }
    }

    pub fn to_csv(&self, precision: usize) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.render(precision)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, precision: usize) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|c| c.json(precision)).collect()))
            .collect();
        let doc = json!({
            "columns": self.columns,
            "metadata": self.metadata,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        match format {
            Format::Csv => self.to_csv(precision),
            Format::Json => self.to_json(precision),
        }
    }
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// so the target is either absent or complete.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_matches_examples() {
        assert_eq!(format_float(0.25, 12), "2.50000000000e-1");
        assert_eq!(format_float(1.0, 12), "1.00000000000e0");
        assert_eq!(format_float(-0.0, 3), "0.00e0");
    }

    #[test]
    fn csv_has_header_and_newlines() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec![Cell::Float(1.0), Cell::Text("x".into())]);
        assert_eq!(t.to_csv(2), "a,b\n1.0e0,x\n");
    }
}
