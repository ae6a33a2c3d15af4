//! CSV tables with a versioned header line, and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

/// Schema version written into every CSV header line.
pub const CSV_SCHEMA: &str = "edgerom-csv/1";

/// In-memory CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A CSV cell.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:e}")
    }
}

impl Cell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        (*self).to_string()
    }
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: &[&dyn Cell]) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row.iter().map(|c| c.cell()).collect());
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {CSV_SCHEMA} {}\n{}\n", self.name, self.columns.join(","));
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).expect("string write");
        }
        out
    }

    /// Writes `<dir>/<name>.csv` and returns the path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Parses a table written by [`Table::render`]: returns the column names and the rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.starts_with(&format!("# {CSV_SCHEMA}")) => {}
        _ => return Err(Error::InvalidInput("missing csv schema line".into())),
    }
    let header = lines.next().ok_or_else(|| Error::InvalidInput("missing csv header".into()))?;
    let cols = header.split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((cols, rows))
}

/// Summary written next to the outputs of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
    /// Items that failed numerically without aborting the run.
    pub failures: Vec<String>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
