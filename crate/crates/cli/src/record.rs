//! Run records (one JSON object per line) and companion CSV tables.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Tag for numbers produced by the artifact itself rather than a closed form.
pub const ARTIFACT_DERIVED: &str = "artifact-derived";

pub const RECORDS_FILE: &str = "records.ndjson";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub command: String,
    pub timestamp: String,
    pub parameters: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    /// Anchor tag for every key of `results`.
    pub provenance: BTreeMap<String, String>,
    /// Grid and refinement metadata.
    pub grid: BTreeMap<String, Value>,
}

impl RunRecord {
    pub fn new(run_id: &str, command: &str) -> Self {
        RunRecord {
            run_id: run_id.to_string(),
            command: command.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            parameters: BTreeMap::new(),
            results: BTreeMap::new(),
            provenance: BTreeMap::new(),
            grid: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.to_string(), v.into());
        self
    }

    pub fn result(&mut self, key: &str, v: impl Into<Value>, provenance: &str) -> &mut Self {
        self.results.insert(key.to_string(), number_or_text(v.into()));
        self.provenance.insert(key.to_string(), provenance.to_string());
        self
    }

    pub fn grid(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.grid.insert(key.to_string(), v.into());
        self
    }

    /// Every result has a provenance tag and nothing else does.
    pub fn is_traceable(&self) -> bool {
        self.results.keys().eq(self.provenance.keys())
    }
}

// JSON has no inf or nan; keep them as text instead of null
fn number_or_text(v: Value) -> Value {
    if v.is_null() {
        Value::String("nan".into())
    } else {
        v
    }
}

/// Real number as a record value, with non-finite values spelled out.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(format!("{x}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; rows go to `<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug)]
pub enum WriteError {
    Io(std::io::Error),
    Csv(csv::Error),
    Json(serde_json::Error),
    Untraceable(String),
}

impl std::fmt::Display for WriteError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WriteError::Io(e) => write!(f, "{e}"),
            WriteError::Csv(e) => write!(f, "{e}"),
            WriteError::Json(e) => write!(f, "{e}"),
            WriteError::Untraceable(k) => write!(f, "record for {k} has results without provenance"),
        }
    }
}

impl From<std::io::Error> for WriteError {
    fn from(e: std::io::Error) -> Self {
        WriteError::Io(e)
    }
}

impl From<csv::Error> for WriteError {
    fn from(e: csv::Error) -> Self {
        WriteError::Csv(e)
    }
}

impl From<serde_json::Error> for WriteError {
    fn from(e: serde_json::Error) -> Self {
        WriteError::Json(e)
    }
}

/// Appends the record as one line of `records.ndjson` under `out_dir`.
pub fn write_record(record: &RunRecord, out_dir: &Path) -> Result<PathBuf, WriteError> {
    if !record.is_traceable() {
        return Err(WriteError::Untraceable(record.command.clone()));
    }
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(RECORDS_FILE);
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
    f.write_all(line.as_bytes())?;
    Ok(path)
}

/// Appends the rows of `table` to `<name>.csv`, prefixed by the run id. The header is
/// written only when the file is new or empty.
pub fn write_table(table: &Table, run_id: &str, out_dir: &Path) -> Result<PathBuf, WriteError> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{}.csv", table.name));
    let f = OpenOptions::new().create(true).append(true).open(&path)?;
    let fresh = f.metadata()?.len() == 0;
    let mut w = csv::Writer::from_writer(f);
    if fresh {
        let mut header = vec!["run_id".to_string()];
        header.extend(table.header.iter().cloned());
        w.write_record(&header)?;
    }
    for row in &table.rows {
        let mut full = vec![run_id.to_string()];
        full.extend(row.iter().cloned());
        w.write_record(&full)?;
    }
    w.flush()?;
    Ok(path)
}

/// Reads every record back from `out_dir`.
pub fn read_records(out_dir: &Path) -> Result<Vec<RunRecord>, WriteError> {
    let text = std::fs::read_to_string(out_dir.join(RECORDS_FILE))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untraceable_records_are_refused() {
        let mut r = RunRecord::new("x", "constants");
        r.result("a", 1.0, ARTIFACT_DERIVED);
        assert!(r.is_traceable());
        r.results.insert("b".into(), Value::from(2.0));
        assert!(!r.is_traceable());
        let dir = std::env::temp_dir().join("hardy-lab-untraceable");
        assert!(matches!(write_record(&r, &dir), Err(WriteError::Untraceable(_))));
    }

    #[test]
    fn non_finite_values_become_text() {
        assert_eq!(real(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(real(1.5), Value::from(1.5));
    }
}
