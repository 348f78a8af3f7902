//! Machine-readable run reports. The content hash covers everything except
//! the runtime block, so identical (config, seed) pairs produce identical
//! hashes no matter the wall clock or thread count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const REPORT_SCHEMA: &str = "bipstls-report-v1";

/// One table cell. Untagged so JSON stays plain; non-finite floats are
/// stored as text to survive the trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn num(v: f64) -> Cell {
        if v.is_finite() {
            Cell::Float(v)
        } else if v.is_nan() {
            Cell::Text("NaN".into())
        } else if v > 0.0 {
            Cell::Text("inf".into())
        } else {
            Cell::Text("-inf".into())
        }
    }

    pub fn int(v: usize) -> Cell {
        Cell::Int(v as i64)
    }

    pub fn text(v: impl Into<String>) -> Cell {
        Cell::Text(v.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            Cell::Text(t) if t == "NaN" => Some(f64::NAN),
            Cell::Text(t) if t == "inf" => Some(f64::INFINITY),
            Cell::Text(t) if t == "-inf" => Some(f64::NEG_INFINITY),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(t) => Some(t),
            _ => None,
        }
    }

    /// CSV rendering; floats use the shortest round-trip form.
    pub fn render(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Bool(b) => b.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows as (column -> cell) maps, for consumers that filter.
    pub fn records(&self) -> impl Iterator<Item = BTreeMap<&str, &Cell>> {
        self.rows.iter().map(move |row| {
            self.columns.iter().map(String::as_str).zip(row.iter()).collect()
        })
    }
}

/// Wall-clock accounting, excluded from the content hash.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub threads: usize,
    pub total_seconds: f64,
    pub sections: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// SHA-256 over the canonical JSON of everything except `runtime` and
    /// this field itself.
    pub content_hash: String,
    pub notes: Vec<String>,
    pub excluded_replicates: u64,
    pub tables: BTreeMap<String, Table>,
    pub runtime: Runtime,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    sha256_hex(serde_json::to_string(&value).expect("value serializes").as_bytes())
}

impl Report {
    pub fn new(config: &ExperimentConfig) -> Report {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            experiment: config.experiment.name().to_string(),
            config: config.clone(),
            config_hash: config_hash(config),
            content_hash: String::new(),
            notes: Vec::new(),
            excluded_replicates: 0,
            tables: BTreeMap::new(),
            runtime: Runtime::default(),
        }
    }

    pub fn insert_table(&mut self, name: &str, table: Table) {
        self.tables.insert(name.to_string(), table);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    /// Recomputes and embeds the content hash.
    pub fn finalize(&mut self) {
        self.content_hash = self.compute_content_hash();
    }

    pub fn compute_content_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let serde_json::Value::Object(map) = &mut value {
            map.remove("runtime");
            map.remove("content_hash");
        }
        sha256_hex(serde_json::to_string(&value).expect("value serializes").as_bytes())
    }
}
