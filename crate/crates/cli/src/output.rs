use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "indexlab/1";

/// A CSV table; cells are preformatted so output is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// RFC 4180: CRLF line endings, header row, minimal quoting.
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::io(&self.name, e.into_error()))
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: String,
    pub experiment: String,
    pub parameters: Value,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub pass: bool,
    pub paper_anchor: String,
    pub wall_time_ms: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<String>,
    /// Non-scalar results, serialized at top level.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes `record.json` and one CSV per table into `dir`.
pub fn write_outputs(dir: &Path, record: &ResultRecord, tables: &[Table]) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    for t in tables {
        write_bytes(&dir.join(format!("{}.csv", t.name)), &t.to_csv()?)?;
    }
    let path = dir.join("record.json");
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    write_bytes(&path, text.as_bytes())?;
    Ok(path)
}
