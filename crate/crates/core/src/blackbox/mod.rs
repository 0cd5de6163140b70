//! Uniform probabilistic-prediction interface over built-in reference models
//! and external models reached through a line-delimited JSON protocol.

mod builtin;
mod external;
pub mod protocol;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{Row, Schema};
use crate::error::{Error, Result};

pub use builtin::{CmpOp, Condition, KnnModel, LinearSoftmax, Rule, RuleModel};
pub use external::{HttpModel, ProcessModel};

/// Row-per-query matrix of class probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityMatrix {
    rows: Vec<Vec<f64>>,
}

/// Largest row-sum deviation accepted without repair.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Largest row-sum deviation an external model may have; repaired by
/// renormalising.
pub const REPAIRABLE_ROW_SUM: f64 = 1e-6;

impl ProbabilityMatrix {
    /// Validates non-negativity and unit row sums (within 1e-9).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::input(format!(
                    "probability row {i} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::input(format!(
                    "probability row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::input(format!("probability row {i} sums to {sum}")));
            }
        }
        Ok(ProbabilityMatrix { rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_classes(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, class: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[class]).collect()
    }

    /// Index of the most probable class per row; ties go to the lowest index.
    pub fn argmax(&self) -> Vec<usize> {
        self.rows.iter().map(|r| argmax(r)).collect()
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Serialisable description of a built-in model; bound to a schema with
/// [`ModelHandle::from_spec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Softmax over `weights · encode(x) + bias`, where `encode` keeps numeric
    /// features and one-hot expands categorical ones.
    LinearSoftmax {
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
    /// First matching rule wins; hard 0/1 probabilities.
    Rule {
        classes: Vec<String>,
        rules: Vec<RuleSpec>,
        default: String,
    },
    /// k nearest training rows under the mixed distance; vote fractions.
    Knn {
        classes: Vec<String>,
        k: usize,
        rows: Vec<Vec<Value>>,
        labels: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub when: Vec<ConditionSpec>,
    pub class: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub feature: String,
    pub op: String,
    pub value: Value,
}

impl ModelSpec {
    pub fn classes(&self) -> &[String] {
        match self {
            ModelSpec::LinearSoftmax { classes, .. }
            | ModelSpec::Rule { classes, .. }
            | ModelSpec::Knn { classes, .. } => classes,
        }
    }
}

#[derive(Debug)]
pub enum ModelHandle {
    LinearSoftmax(LinearSoftmax),
    Rule(RuleModel),
    Knn(KnnModel),
    Process(ProcessModel),
    Http(HttpModel),
}

impl ModelHandle {
    pub fn from_spec(spec: &ModelSpec, schema: &Schema) -> Result<Self> {
        let digest = crate::canonical::digest(spec)?;
        Ok(match spec {
            ModelSpec::LinearSoftmax {
                classes,
                weights,
                bias,
            } => ModelHandle::LinearSoftmax(LinearSoftmax::new(
                schema.clone(),
                classes.clone(),
                weights.clone(),
                bias.clone(),
                digest,
            )?),
            ModelSpec::Rule {
                classes,
                rules,
                default,
            } => ModelHandle::Rule(RuleModel::from_spec(
                schema, classes, rules, default, digest,
            )?),
            ModelSpec::Knn {
                classes,
                k,
                rows,
                labels,
            } => ModelHandle::Knn(KnnModel::from_spec(
                schema, classes, *k, rows, labels, digest,
            )?),
        })
    }

    /// Spawns `command` (through `sh -c`) and completes the handshake.
    pub fn open_process(command: &str, classes: Vec<String>, schema: &Schema) -> Result<Self> {
        Ok(ModelHandle::Process(ProcessModel::open(
            command,
            classes,
            schema.clone(),
        )?))
    }

    pub fn open_http(url: &str, classes: Vec<String>, schema: &Schema) -> Result<Self> {
        Ok(ModelHandle::Http(HttpModel::open(
            url,
            classes,
            schema.clone(),
        )?))
    }

    /// Opens `cmd:<command line>` or `http(s)://...` / `http:<url>`.
    pub fn open_external(
        command_or_url: &str,
        classes: Vec<String>,
        schema: &Schema,
    ) -> Result<Self> {
        if let Some(cmd) = command_or_url.strip_prefix("cmd:") {
            Self::open_process(cmd, classes, schema)
        } else if command_or_url.starts_with("http://") || command_or_url.starts_with("https://") {
            Self::open_http(command_or_url, classes, schema)
        } else if let Some(url) = command_or_url.strip_prefix("http:") {
            Self::open_http(url, classes, schema)
        } else {
            Self::open_process(command_or_url, classes, schema)
        }
    }

    pub fn class_names(&self) -> &[String] {
        match self {
            ModelHandle::LinearSoftmax(m) => &m.classes,
            ModelHandle::Rule(m) => &m.classes,
            ModelHandle::Knn(m) => &m.classes,
            ModelHandle::Process(m) => m.classes(),
            ModelHandle::Http(m) => m.classes(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_names().len()
    }

    pub fn schema(&self) -> &Schema {
        match self {
            ModelHandle::LinearSoftmax(m) => &m.schema,
            ModelHandle::Rule(m) => &m.schema,
            ModelHandle::Knn(m) => &m.schema,
            ModelHandle::Process(m) => m.schema(),
            ModelHandle::Http(m) => m.schema(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelHandle::LinearSoftmax(_) => "builtin_linear_softmax",
            ModelHandle::Rule(_) => "builtin_rule",
            ModelHandle::Knn(_) => "builtin_knn",
            ModelHandle::Process(_) => "external_process",
            ModelHandle::Http(_) => "external_http",
        }
    }

    /// Stable description embedded in reports.
    pub fn descriptor(&self) -> Value {
        let mut d = serde_json::Map::new();
        d.insert("kind".into(), self.kind().into());
        d.insert("classes".into(), self.class_names().into());
        match self {
            ModelHandle::LinearSoftmax(m) => {
                d.insert("spec_digest".into(), m.spec_digest.clone().into())
            }
            ModelHandle::Rule(m) => d.insert("spec_digest".into(), m.spec_digest.clone().into()),
            ModelHandle::Knn(m) => d.insert("spec_digest".into(), m.spec_digest.clone().into()),
            ModelHandle::Process(m) => d.insert("command".into(), m.command().into()),
            ModelHandle::Http(m) => d.insert("url".into(), m.url().into()),
        };
        Value::Object(d)
    }

    /// One probability row per input row, in order. External models receive
    /// all rows in a single request.
    pub fn predict_proba(&self, rows: &[Row]) -> Result<ProbabilityMatrix> {
        let schema = self.schema();
        for (i, row) in rows.iter().enumerate() {
            schema
                .check_row(row)
                .map_err(|e| Error::input(format!("query row {i}: {e}")))?;
        }
        if rows.is_empty() {
            return Ok(ProbabilityMatrix { rows: Vec::new() });
        }
        match self {
            ModelHandle::LinearSoftmax(m) => Ok(ProbabilityMatrix {
                rows: rows.iter().map(|r| m.predict_row(r)).collect(),
            }),
            ModelHandle::Rule(m) => Ok(ProbabilityMatrix {
                rows: rows.iter().map(|r| m.predict_row(r)).collect(),
            }),
            ModelHandle::Knn(m) => Ok(ProbabilityMatrix {
                rows: rows.iter().map(|r| m.predict_row(r)).collect(),
            }),
            ModelHandle::Process(m) => m.predict(rows),
            ModelHandle::Http(m) => m.predict(rows),
        }
    }
}
