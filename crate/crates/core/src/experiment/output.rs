use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// A CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn has_non_finite(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .any(|c| matches!(c, Cell::Float(v) if !v.is_finite()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(v) => out.push_str(&format_float(*v)),
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Text(s) => out.push_str(s),
                    Cell::Empty => {}
                }
            }
            out.push('\n');
        }
        out
    }
}

/// One pass/fail acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: String,
    pub passed: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        value: f64,
        target: f64,
        tolerance: impl Into<String>,
        passed: bool,
    ) -> Self {
        Check {
            name: name.into(),
            value,
            target,
            tolerance: tolerance.into(),
            passed: passed && value.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub rows: usize,
    pub sha256: String,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes `table` under `root` at `relative` and returns its index entry.
pub(crate) fn write_table(root: &Path, relative: &str, table: &Table) -> Result<FileEntry> {
    let path = root.join(relative);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let body = table.to_csv();
    fs::write(&path, &body)?;
    Ok(FileEntry {
        path: relative.to_string(),
        rows: table.rows.len(),
        sha256: sha256_hex(body.as_bytes()),
    })
}

/// Removes outputs of a previous run so the new manifest matches the
/// directory contents.
pub(crate) fn clear_previous(root: &Path) -> Result<()> {
    for name in ["manifest.json", "series.csv"] {
        let p = root.join(name);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    let snaps = root.join("snapshots");
    if snaps.is_dir() {
        for entry in fs::read_dir(&snaps)? {
            let p: PathBuf = entry?.path();
            if p.extension().is_some_and(|e| e == "csv") {
                fs::remove_file(p)?;
            }
        }
    }
    Ok(())
}

/// Writes JSON through a temporary file and a rename.
pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            2.0e4 + 1e-9,
            -6.05e-7,
            f64::MIN_POSITIVE,
            1.7e308,
        ] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["t", "m", "C", "note"]);
        t.push(vec![1usize.into(), 2u32.into(), 0.5.into(), Cell::Empty]);
        assert_eq!(t.to_csv(), "t,m,C,note\n1,2,5.0000000000000000e-1,\n");
        assert!(!t.has_non_finite());
        t.push(vec![
            2usize.into(),
            2u32.into(),
            f64::INFINITY.into(),
            "x".into(),
        ]);
        assert!(t.has_non_finite());
    }

    #[test]
    fn non_finite_check_fails() {
        assert!(!Check::new("x", f64::NAN, 1.0, "any", true).passed);
        assert!(Check::new("x", 1.0, 1.0, "any", true).passed);
    }
}
