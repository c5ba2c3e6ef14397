//! Tabular artifacts and all-or-nothing writes into the output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::OutputFormat;
use crate::error::RunError;

/// One cell of a table. Floats are printed in shortest round-trip form so
/// the same value always yields the same bytes.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) => Value::from(*x),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    /// An array of objects whose keys are the column names.
    pub fn to_json(&self) -> Vec<u8> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let mut bytes = serde_json::to_vec_pretty(&records).expect("serializable");
        bytes.push(b'\n');
        bytes
    }

    pub fn encode(&self, format: OutputFormat) -> Vec<u8> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

pub fn json_bytes<S: Serialize>(value: &S) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// An output file held in memory until the whole run has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn table(stem: &str, table: &Table, format: OutputFormat) -> Self {
        let ext = match format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        Artifact { name: format!("{stem}.{ext}"), bytes: table.encode(format) }
    }

    pub fn json<S: Serialize>(name: &str, value: &S) -> Self {
        Artifact { name: name.to_owned(), bytes: json_bytes(value) }
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }
}

fn temp_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!(".{name}.tmp-{}", std::process::id()))
}

fn io_error(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io { path: path.to_owned(), source }
}

/// Creates `dir` if needed and proves it accepts new files.
pub fn ensure_writable(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let probe = temp_path(dir, "probe");
    fs::File::create(&probe).map_err(|e| io_error(dir, e))?;
    fs::remove_file(&probe).map_err(|e| io_error(&probe, e))
}

fn write_one(dir: &Path, artifact: &Artifact) -> Result<(), RunError> {
    let tmp = temp_path(dir, &artifact.name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&artifact.bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, dir.join(&artifact.name))
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_error(&dir.join(&artifact.name), e)
    })
}

/// Writes every artifact via temp file + rename. If any write fails, the
/// files already placed by this call are removed again.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<(), RunError> {
    for (i, a) in artifacts.iter().enumerate() {
        if let Err(e) = write_one(dir, a) {
            for done in &artifacts[..i] {
                let _ = fs::remove_file(dir.join(&done.name));
            }
            return Err(e);
        }
    }
    Ok(())
}
