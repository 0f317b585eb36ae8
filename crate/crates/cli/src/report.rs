//! Long-format tables: one value per row, each tagged with where it came from.

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Literature value, not computed here.
    Reference,
    /// Closed-form prediction evaluated from other quantities.
    Derived,
    /// Computed from the constructed objects.
    Measured,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Reference => "reference",
            Provenance::Derived => "derived",
            Provenance::Measured => "measured",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => write!(f, "{v:e}"),
            Cell::Text(v) => write!(f, "{v}"),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        i64::try_from(v).map(Cell::Int).unwrap_or_else(|_| Cell::Text(v.to_string()))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub key: String,
    pub quantity: String,
    pub value: Cell,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: String,
    /// Header of the key column in CSV output.
    pub key_name: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(experiment: &str, key_name: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            key_name: key_name.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, quantity: &str, value: impl Into<Cell>, provenance: Provenance) {
        self.rows.push(Row {
            key: key.into(),
            quantity: quantity.to_string(),
            value: value.into(),
            provenance,
        });
    }

    pub fn get(&self, key: &str, quantity: &str) -> Option<&Cell> {
        self.rows
            .iter()
            .find(|r| r.key == key && r.quantity == quantity)
            .map(|r| &r.value)
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    &self.key_name: r.key,
                    "quantity": r.quantity,
                    "value": r.value,
                    "provenance": r.provenance,
                })
            })
            .collect();
        json!({
            "experiment": self.experiment,
            "config": cfg.echo(),
            "rows": rows,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},quantity,value,provenance\n", self.key_name);
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.key, r.quantity, r.value, r.provenance.as_str()));
        }
        out
    }
}
