//! Commands shared by the CLI and the service.

use serde::Serialize;
use serde_json::{json, Value};
use surrogate_core::blackbox::ModelHandle;
use surrogate_core::canonical::{digest, to_canonical_string};
use surrogate_core::config::{ClassRef, ExplainerConfig};
use surrogate_core::data::{ExplainedInstance, TabularDataset};
use surrogate_core::evaluation::{stability, StabilityReport};
use surrogate_core::global::{
    ice_curves, partial_dependence, permutation_importance, GridSpec, IceCurves, ImportanceMetric,
    PdResult, PermutationImportanceResult,
};
use surrogate_core::report::{explain, ExplanationReport, ReportOptions};

use crate::Failure;

pub const API_VERSION: u32 = 1;
pub const DEFAULT_REPEATS: usize = 5;

/// The loaded dataset and model. Never modified after start-up.
#[derive(Debug)]
pub struct Workspace {
    pub dataset: TabularDataset,
    pub model: ModelHandle,
}

/// The report and its canonical text, which is what gets written or sent.
pub fn explain_report(
    ws: &Workspace,
    config: &ExplainerConfig,
    anchor: &ExplainedInstance,
    seed: u64,
    options: ReportOptions,
) -> Result<(ExplanationReport, String), Failure> {
    let report = explain(config, &ws.dataset, &ws.model, anchor, seed, options)?;
    let text = report.to_canonical_json()?;
    Ok((report, text))
}

/// `top_k` and the seed list fall back to the config's evaluation section.
pub fn stability_report(
    ws: &Workspace,
    config: &ExplainerConfig,
    anchor: &ExplainedInstance,
    seeds: &[u64],
    top_k: Option<usize>,
) -> Result<StabilityReport, Failure> {
    let k = top_k.unwrap_or(config.evaluation.stability_k);
    if k == 0 {
        return Err(Failure::Usage("top-k must be at least 1".into()));
    }
    Ok(stability(config, &ws.dataset, &ws.model, anchor, seeds, k)?)
}

/// Labels default to the model's own predictions on the dataset, which
/// makes the baseline accuracy 1.
pub fn perm_importance(
    ws: &Workspace,
    labels: Option<Vec<usize>>,
    repeats: usize,
    seed: u64,
) -> Result<PermutationImportanceResult, Failure> {
    let labels = match labels {
        Some(l) => l,
        None => ws.model.predict_proba(ws.dataset.rows())?.argmax(),
    };
    Ok(permutation_importance(
        &ws.model,
        &ws.dataset,
        &labels,
        ImportanceMetric::Accuracy,
        repeats,
        seed,
    )?)
}

/// Without an explicit target, curves follow the last class (the positive
/// class of a binary model).
pub fn target_index(ws: &Workspace, target: Option<&ClassRef>) -> Result<usize, Failure> {
    match target {
        Some(c) => Ok(c.resolve(ws.model.class_names())?),
        None => Ok(ws.model.n_classes() - 1),
    }
}

pub fn ice(
    ws: &Workspace,
    feature: usize,
    grid: &GridSpec,
    target: Option<&ClassRef>,
) -> Result<IceCurves, Failure> {
    let target = target_index(ws, target)?;
    Ok(ice_curves(&ws.model, &ws.dataset, feature, grid, target)?)
}

pub fn pd(
    ws: &Workspace,
    feature: usize,
    grid: &GridSpec,
    target: Option<&ClassRef>,
) -> Result<PdResult, Failure> {
    let ice = ice(ws, feature, grid, target)?;
    let pd = partial_dependence(&ice)?;
    Ok(PdResult { pd, ice })
}

pub fn canonical<T: Serialize + ?Sized>(value: &T) -> Result<String, Failure> {
    Ok(to_canonical_string(value)?)
}

/// Fingerprint of the parameters of a request that has no explainer config.
pub fn parameters_fingerprint(parameters: &Value) -> Result<String, Failure> {
    Ok(digest(parameters)?)
}

/// `{"fingerprint":..,"report":..,"version":1}` with `body` spliced in as
/// is, so the report bytes inside match the CLI's output file exactly.
pub fn envelope(fingerprint: Option<&str>, body: &str) -> String {
    let fingerprint = match fingerprint {
        Some(f) => Value::String(f.to_owned()).to_string(),
        None => "null".to_owned(),
    };
    format!("{{\"fingerprint\":{fingerprint},\"report\":{body},\"version\":{API_VERSION}}}")
}

/// Returns the report text inside an envelope produced by [`envelope`].
pub fn envelope_body(envelope: &str) -> Option<&str> {
    let rest = envelope.strip_prefix("{\"fingerprint\":")?;
    let start = rest.find(",\"report\":")? + ",\"report\":".len();
    let suffix = format!(",\"version\":{API_VERSION}}}");
    rest[start..].strip_suffix(suffix.as_str())
}

pub fn grid_parameters(grid: &GridSpec) -> Value {
    match grid {
        GridSpec::Explicit(values) => json!({"values": values}),
        GridSpec::Points(n) => json!({"points": n}),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use surrogate_core::canonical::canonical_value_string;

    #[test]
    fn envelope_is_canonical_and_splittable() {
        let body = r#"{"a":1,"b":[2.5]}"#;
        let env = envelope(Some("abc"), body);
        let parsed: Value = serde_json::from_str(&env).unwrap();
        assert_eq!(canonical_value_string(&parsed), env);
        assert_eq!(envelope_body(&env), Some(body));
        let bare = envelope(None, "{}");
        assert_eq!(bare, r#"{"fingerprint":null,"report":{},"version":1}"#);
        assert_eq!(envelope_body(&bare), Some("{}"));
    }
}
