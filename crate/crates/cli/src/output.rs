//! Output files. Every file begins with (CSV) or contains (JSON) the
//! manifest hash; floats are written in shortest round-trip form.

use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(name: &str, header: Vec<String>) -> Self {
        Self { name: name.to_string(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Renders the table; a non-finite cell is an error naming its column.
    pub fn render(&self, manifest_hash: &str) -> Result<Artifact, CliError> {
        let mut out = format!("# manifest_hash = {manifest_hash}\n{}\n", self.header.join(","));
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match *cell {
                    Cell::Int(v) => out.push_str(&v.to_string()),
                    Cell::Float(v) if v.is_finite() => out.push_str(&format!("{v:e}")),
                    Cell::Float(_) => {
                        return Err(CliError::NonFinite { file: self.name.clone(), column: self.header[i].clone() })
                    }
                }
            }
            out.push('\n');
        }
        Ok(Artifact { name: self.name.clone(), contents: out.into_bytes() })
    }
}

/// Pretty JSON object with `manifest_hash` added as a field.
pub fn json_artifact(name: &str, manifest_hash: &str, mut body: Map<String, Value>) -> Result<Artifact, CliError> {
    body.insert("manifest_hash".into(), Value::String(manifest_hash.to_string()));
    let value = Value::Object(body);
    if !all_finite(&value) {
        return Err(CliError::NonFinite { file: name.to_string(), column: "json".into() });
    }
    let mut contents = serde_json::to_vec_pretty(&value).expect("json values serialize");
    contents.push(b'\n');
    Ok(Artifact { name: name.to_string(), contents })
}

// serde_json maps non-finite floats to null; nulls never appear otherwise.
fn all_finite(value: &Value) -> bool {
    match value {
        Value::Null => false,
        Value::Array(items) => items.iter().all(all_finite),
        Value::Object(map) => map.values().all(all_finite),
        _ => true,
    }
}

/// Reads the hash line of a CSV written by [`CsvTable::render`].
pub fn csv_manifest_hash(contents: &str) -> Option<&str> {
    contents.lines().next()?.strip_prefix("# manifest_hash = ")
}
