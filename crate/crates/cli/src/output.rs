//! CSV and JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Numeric table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self { name: name.into(), columns, rows: Vec::new() }
    }

    /// Builds a table from equally long columns.
    pub fn from_columns(name: impl Into<String>, columns: Vec<(&'static str, &[f64])>) -> Self {
        let len = columns.first().map_or(0, |c| c.1.len());
        assert!(columns.iter().all(|c| c.1.len() == len), "column lengths differ");
        let mut t = Table::new(name, columns.iter().map(|c| c.0).collect());
        t.rows = (0..len).map(|i| columns.iter().map(|c| c.1[i]).collect()).collect();
        t
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn output_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Output { path: path.to_path_buf(), message: e.to_string() }
}

pub fn write_csv(dir: &Path, table: &Table) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.csv", table.name));
    let mut w = csv::Writer::from_path(&path).map_err(|e| output_error(&path, e))?;
    w.write_record(&table.columns).map_err(|e| output_error(&path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| format_value(v))).map_err(|e| output_error(&path, e))?;
    }
    w.flush().map_err(|e| output_error(&path, e))?;
    Ok(path)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| output_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| output_error(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))
}
