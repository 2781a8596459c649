//! File formats.
//!
//! Systems are JSON objects with complex numbers written as `[re, im]` pairs:
//!
//! ```json
//! {"hamiltonian": [[[0.25, 0], [0.1, 0]], [[0.1, 0], [-0.25, 0]]],
//!  "decay_state": [[1, 0], [0, 0]],
//!  "gamma": 1.0}
//! ```
//!
//! A `"channels"` array of states replaces `"decay_state"` for several decay
//! channels. Tabular output is CSV whose first line is `#` followed by a
//! one-line JSON header, then a line of column names.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::models::MultiChannelSystem;
use crate::spectral::{QuantumSystem, C64};

pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub hamiltonian: Vec<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_state: Option<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<Vec<ComplexPair>>>,
    pub gamma: f64,
}

fn to_vector(v: &[ComplexPair]) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().map(|&[re, im]| C64::new(re, im)))
}

fn from_vector(v: &DVector<C64>) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("system json: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system spec serialises")
    }

    pub fn from_system(system: &QuantumSystem) -> Self {
        Self {
            hamiltonian: matrix_pairs(system.hamiltonian()),
            decay_state: Some(from_vector(system.decay_state())),
            channels: None,
            gamma: system.gamma(),
        }
    }

    pub fn from_multichannel(system: &MultiChannelSystem) -> Self {
        Self {
            hamiltonian: matrix_pairs(system.hamiltonian()),
            decay_state: None,
            channels: Some(system.channels().iter().map(from_vector).collect()),
            gamma: system.gamma(),
        }
    }

    pub fn hamiltonian_matrix(&self) -> Result<DMatrix<C64>> {
        let n = self.hamiltonian.len();
        if self.hamiltonian.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch(format!("hamiltonian rows must all have length {n}")));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.hamiltonian[i][j];
            C64::new(re, im)
        }))
    }

    pub fn to_system(&self) -> Result<QuantumSystem> {
        let state = match (&self.decay_state, &self.channels) {
            (Some(v), _) => v.clone(),
            (None, Some(ch)) if ch.len() == 1 => ch[0].clone(),
            _ => return Err(Error::invalid("a single-channel system needs \"decay_state\"")),
        };
        QuantumSystem::new(self.hamiltonian_matrix()?, to_vector(&state), self.gamma)
    }

    pub fn to_multichannel(&self) -> Result<MultiChannelSystem> {
        let channels: Vec<DVector<C64>> = match (&self.channels, &self.decay_state) {
            (Some(ch), _) => ch.iter().map(|v| to_vector(v)).collect(),
            (None, Some(v)) => vec![to_vector(v)],
            (None, None) => return Err(Error::invalid("system needs \"channels\" or \"decay_state\"")),
        };
        MultiChannelSystem::new(self.hamiltonian_matrix()?, channels, self.gamma)
    }
}

fn matrix_pairs(h: &DMatrix<C64>) -> Vec<Vec<ComplexPair>> {
    (0..h.nrows()).map(|i| (0..h.ncols()).map(|j| [h[(i, j)].re, h[(i, j)].im]).collect()).collect()
}

/// A numeric table with a JSON header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: Value, columns: &[&str]) -> Self {
        Self { header, columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Numbers use the shortest representation that parses back exactly.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# {}", serde_json::to_string(&self.header).expect("header serialises"))?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn parse<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = || -> Result<Option<String>> {
            lines.next().transpose().map_err(|e| Error::invalid(format!("csv read: {e}")))
        };
        let first = next()?.ok_or_else(|| Error::invalid("csv is empty"))?;
        let json = first
            .strip_prefix('#')
            .ok_or_else(|| Error::invalid("csv must start with a '#' header line"))?;
        let header: Value =
            serde_json::from_str(json.trim()).map_err(|e| Error::invalid(format!("csv header: {e}")))?;
        let names = next()?.ok_or_else(|| Error::invalid("csv has no column line"))?;
        let columns: Vec<String> = names.split(',').map(|s| s.trim().to_string()).collect();
        let mut table = Self { header, columns, rows: Vec::new() };
        while let Some(line) = next()? {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|e| Error::invalid(format!("csv cell '{cell}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(row)?;
        }
        Ok(table)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::parse(text.as_bytes())
    }
}
