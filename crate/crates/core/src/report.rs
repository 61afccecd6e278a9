//! Report serialization: RFC-4180 CSV tables with a JSON metadata comment
//! line and 17-significant-digit floats, plus stable-order JSON documents.

use crate::Real;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// One CSV cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Float(Real),
    Int(i64),
    Text(String),
}

impl From<Real> for Cell {
    fn from(v: Real) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(v: Real) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug)]
pub struct CsvTable {
    /// Embedded in the leading comment line.
    pub meta: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(meta: serde_json::Value, columns: &[&str]) -> Self {
        Self { meta, columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Serialize: `# <meta json>` comment line, then RFC-4180 records with
    /// CRLF line endings and '.' decimal floats.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"# ");
        out.extend_from_slice(
            serde_json::to_string(&self.meta).expect("meta serializes").as_bytes(),
        );
        out.extend_from_slice(b"\r\n");
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("header");
        for row in &self.rows {
            let rec: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(v) => format_float(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            w.write_record(&rec).expect("record");
        }
        out.extend_from_slice(&w.into_inner().expect("csv buffer"));
        out
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())
    }
}

/// Stable-order pretty JSON document (struct field order) with a trailing
/// newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, json_bytes(value))
}
