use std::io::Write;
use std::path::Path;

use dissipation::io::CsvTable;
use serde_json::{json, Map, Value};

use crate::args::Format;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files.
    Usage(String),
    Core(dissipation::Error),
    Write(String),
}

impl From<dissipation::Error> for Failure {
    fn from(e: dissipation::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(e) if e.is_validation() => 2,
            Failure::Core(_) | Failure::Write(_) => 3,
        }
    }

    /// One line of JSON for stderr.
    pub fn to_json_line(&self) -> String {
        let (kind, message) = match self {
            Failure::Usage(m) => ("validation", m.clone()),
            Failure::Core(e) if e.is_validation() => ("validation", e.to_string()),
            Failure::Core(e) => ("numerical", e.to_string()),
            Failure::Write(m) => ("io", m.clone()),
        };
        json!({"error": kind, "message": message.replace('\n', " ")}).to_string()
    }
}

/// Summary fields plus an optional table of rows.
#[derive(Debug)]
pub struct Report {
    pub summary: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Report {
    pub fn new(summary: Map<String, Value>, columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self { summary, columns: columns.iter().map(|c| c.to_string()).collect(), rows }
    }

    pub fn render(self, header: Map<String, Value>, format: Format) -> String {
        let mut top = header;
        top.extend(self.summary);
        match format {
            Format::Json => {
                top.insert("columns".into(), json!(self.columns));
                top.insert("rows".into(), json!(self.rows));
                let mut text = serde_json::to_string_pretty(&Value::Object(top)).expect("report serialises");
                text.push('\n');
                text
            }
            Format::Csv => {
                let cols: Vec<&str> = self.columns.iter().map(String::as_str).collect();
                let mut table = CsvTable::new(Value::Object(top), &cols);
                table.rows = self.rows;
                table.to_csv_string()
            }
        }
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Write(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Write(e.to_string()))
        }
    }
}
