use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One row of a report: a grid point or a stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub samples: u64,
    /// `None` when the cell carries no assertion.
    pub pass: Option<bool>,
    pub values: IndexMap<String, Value>,
}

impl Cell {
    pub fn new(label: impl Into<String>, samples: u64) -> Self {
        Self {
            label: label.into(),
            samples,
            pass: None,
            values: IndexMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Like [`Cell::set`], but keeps non-finite values readable as text
    /// instead of JSON `null`.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        let v = if value.is_finite() {
            Value::from(value)
        } else {
            Value::from(value.to_string())
        };
        self.values.insert(key.to_string(), v);
    }

    pub fn num(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(Value::as_f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub fingerprint: String,
    pub seed: u64,
    pub parameters: Value,
    pub cells: Vec<Cell>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, fingerprint: String, seed: u64, parameters: Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            fingerprint,
            seed,
            parameters,
            cells: Vec::new(),
            passed: true,
            notes: Vec::new(),
        }
    }

    /// Sets `passed` from the asserted cells.
    pub fn finish(mut self) -> Self {
        self.passed = self.passed && self.cells.iter().all(|c| c.pass != Some(false));
        self
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.passed = false;
        self.notes.push(note.into());
    }

    pub fn cell(&self, label: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.label == label)
    }

    /// Union of the value keys in first-seen order.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: IndexMap<String, ()> = IndexMap::new();
        for c in &self.cells {
            for k in c.values.keys() {
                cols.entry(k.clone()).or_insert(());
            }
        }
        cols.into_keys().collect()
    }

    /// `cell,samples,pass,<value columns>`; LF line endings.
    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        let mut out = String::from("cell,samples,pass");
        for c in &cols {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for cell in &self.cells {
            let pass = match cell.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            };
            let _ = write!(out, "{},{},{}", csv_field(&cell.label), cell.samples, pass);
            for c in &cols {
                out.push(',');
                if let Some(v) = cell.values.get(c) {
                    out.push_str(&csv_field(&render(v)));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
