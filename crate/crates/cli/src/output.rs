use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&str]) -> Self {
        Table { name: name.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let internal = |e: csv::Error| CliError::Internal(format!("{}: {e}", self.name));
        w.write_record(&self.headers).map_err(internal)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(internal)?;
        }
        w.into_inner().map_err(|e| CliError::Internal(format!("{}: {e}", self.name)))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.headers.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes artifacts into the output directory and keeps their checksums.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    format: Format,
    written: Vec<(String, String)>,
}

impl Output {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), format, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[(String, String)] {
        &self.written
    }

    pub fn bytes(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(file);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        self.written.retain(|(f, _)| f != file);
        self.written.push((file.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn json(&mut self, file: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        self.bytes(file, text.as_bytes())
    }

    /// Writes `table` as `<name>.csv` or `<name>.json` depending on the format.
    pub fn table(&mut self, table: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let bytes = table.to_csv()?;
                self.bytes(&format!("{}.csv", table.name), &bytes)
            }
            Format::Json => self.json(&format!("{}.json", table.name), &table.to_json()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_rendering() {
        let mut t = Table::new("t", &["a", "b", "c"]);
        t.push(vec!["x,y".into(), 0.5.into(), Cell::Empty]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b,c\n\"x,y\",0.5,\n");
        assert_eq!(t.to_json()[0]["b"], 0.5);
        assert!(t.to_json()[0]["c"].is_null());
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
