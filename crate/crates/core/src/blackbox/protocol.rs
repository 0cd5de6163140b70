//! Line-delimited JSON protocol spoken with external models.
//!
//! ```text
//! -> {"op":"handshake","schema":[...],"classes":[...]}   <- {"ok":true}
//! -> {"op":"predict","rows":[[...],...]}                 <- {"probabilities":[[...],...]}
//! -> {"op":"shutdown"}                                   <- (process exits 0)
//! ```
//!
//! Numeric cells travel as JSON numbers, categorical cells as category names.
//! The HTTP variant POSTs the `rows` payload to `/predict` and receives the
//! same `probabilities` payload.

use std::io::{BufRead, Write};

use serde_json::{json, Value};

use super::{ModelHandle, ModelSpec, ProbabilityMatrix, REPAIRABLE_ROW_SUM, ROW_SUM_TOLERANCE};
use crate::data::{Row, Schema};
use crate::error::{Error, Result};

pub fn handshake_request(schema: &Schema, classes: &[String]) -> Value {
    json!({"op": "handshake", "schema": schema, "classes": classes})
}

pub fn encode_rows(schema: &Schema, rows: &[Row]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Array(schema.row_to_json(r)))
            .collect(),
    )
}

pub fn predict_request(schema: &Schema, rows: &[Row]) -> Value {
    json!({"op": "predict", "rows": encode_rows(schema, rows)})
}

pub fn shutdown_request() -> Value {
    json!({"op": "shutdown"})
}

/// Parses a `{"probabilities": ...}` response.
///
/// Rows summing to within 1e-9 of one are kept bit-for-bit; rows within 1e-6
/// are renormalised; anything else is a protocol error.
pub fn decode_probabilities(
    response: &Value,
    n_rows: usize,
    n_classes: usize,
) -> Result<ProbabilityMatrix> {
    if let Some(err) = response.get("error") {
        return Err(Error::Protocol(format!("model reported error: {err}")));
    }
    let rows = response
        .get("probabilities")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Protocol("response lacks a \"probabilities\" array".into()))?;
    if rows.len() != n_rows {
        return Err(Error::Protocol(format!(
            "expected {n_rows} probability rows, got {}",
            rows.len()
        )));
    }
    let mut out = Vec::with_capacity(n_rows);
    for (i, row) in rows.iter().enumerate() {
        let values = row
            .as_array()
            .ok_or_else(|| Error::Protocol(format!("probability row {i} is not an array")))?;
        if values.len() != n_classes {
            return Err(Error::Protocol(format!(
                "probability row {i} has {} entries, expected {n_classes}",
                values.len()
            )));
        }
        let mut p: Vec<f64> = values
            .iter()
            .map(|v| v.as_f64().filter(|x| x.is_finite() && *x >= 0.0))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Protocol(format!("probability row {i} has an invalid entry")))?;
        let sum: f64 = p.iter().sum();
        let gap = (sum - 1.0).abs();
        if gap > REPAIRABLE_ROW_SUM {
            return Err(Error::Protocol(format!(
                "probability row {i} sums to {sum}"
            )));
        }
        if gap > ROW_SUM_TOLERANCE {
            for x in &mut p {
                *x /= sum;
            }
        }
        out.push(p);
    }
    ProbabilityMatrix::new(out).map_err(|e| Error::Protocol(e.to_string()))
}

/// What a protocol host answers with.
#[derive(Clone, Debug)]
pub enum HostedModel {
    /// A built-in model bound to the schema received in the handshake.
    Builtin(ModelSpec),
    /// Uniform probabilities over the handshake's classes.
    Uniform,
}

/// Serves the protocol until `shutdown` or end of input.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W, hosted: &HostedModel) -> Result<()> {
    let mut bound: Option<(Schema, Option<ModelHandle>, usize)> = None;
    for line in input.lines() {
        let line = line.map_err(|e| Error::Transport(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Value = serde_json::from_str(&line)?;
        let reply = match request.get("op").and_then(Value::as_str) {
            Some("handshake") => match bind(&request, hosted) {
                Ok((schema, handle, classes)) => {
                    let n = classes.len();
                    bound = Some((schema, handle, n));
                    json!({"ok": true, "classes": classes})
                }
                Err(e) => json!({"ok": false, "error": e.to_string()}),
            },
            Some("predict") => match &bound {
                None => json!({"error": "predict before handshake"}),
                Some((schema, handle, n_classes)) => {
                    match predict(&request, schema, handle.as_ref(), *n_classes) {
                        Ok(p) => json!({ "probabilities": p }),
                        Err(e) => json!({"error": e.to_string()}),
                    }
                }
            },
            Some("shutdown") => return Ok(()),
            _ => json!({"error": "unknown op"}),
        };
        writeln!(output, "{reply}").map_err(|e| Error::Transport(e.to_string()))?;
        output
            .flush()
            .map_err(|e| Error::Transport(e.to_string()))?;
    }
    Ok(())
}

fn bind(
    request: &Value,
    hosted: &HostedModel,
) -> Result<(Schema, Option<ModelHandle>, Vec<String>)> {
    let schema: Schema =
        serde_json::from_value(request.get("schema").cloned().unwrap_or(Value::Null))?;
    let schema = Schema::new(schema.features().to_vec())?;
    let requested: Vec<String> =
        serde_json::from_value(request.get("classes").cloned().unwrap_or(Value::Null))?;
    match hosted {
        HostedModel::Uniform => Ok((schema, None, requested)),
        HostedModel::Builtin(spec) => {
            let handle = ModelHandle::from_spec(spec, &schema)?;
            let classes = handle.class_names().to_vec();
            Ok((schema, Some(handle), classes))
        }
    }
}

fn predict(
    request: &Value,
    schema: &Schema,
    handle: Option<&ModelHandle>,
    n_classes: usize,
) -> Result<ProbabilityMatrix> {
    let rows = request
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::input("predict request lacks \"rows\""))?;
    let rows: Vec<Row> = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::input("row is not an array"))
                .and_then(|cells| schema.row_from_json(cells))
        })
        .collect::<Result<_>>()?;
    match handle {
        Some(h) => h.predict_proba(&rows),
        None => ProbabilityMatrix::new(vec![vec![1.0 / n_classes as f64; n_classes]; rows.len()]),
    }
}
