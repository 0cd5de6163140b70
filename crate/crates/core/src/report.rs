//! The explanation report written by the CLI and returned by the service,
//! and its self-check.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::blackbox::ModelHandle;
use crate::canonical::{digest, to_canonical_string};
use crate::config::{validate, ExplainerConfig};
use crate::data::{ExplainedInstance, TabularDataset};
use crate::error::{Error, Result};
use crate::evaluation::{
    local_fidelity, FidelityScore, RepresentationDiagnostics, StabilityReport,
};
use crate::explain::surrogate::{Explanation, Surrogate};
use crate::pipeline::{run, surrogate_inputs, PipelineRun};
use crate::sampling::SampleSet;

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    /// Cells as JSON: numbers, or category names.
    pub values: Vec<Value>,
    pub row_ref: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub artifact_version: u32,
    pub dataset_digest: String,
    pub config: ExplainerConfig,
    pub fingerprint: String,
    pub seed: u64,
    pub anchor: AnchorRecord,
    pub anchor_probabilities: Vec<f64>,
    pub blackbox: Value,
    pub target_class: usize,
    pub interpretable_features: Vec<String>,
    pub explanation: Explanation,
    pub surrogate: Surrogate,
    pub fidelity: FidelityScore,
    pub diagnostics: RepresentationDiagnostics,
    pub sample_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<StageTiming>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Embed every sample (needed by `verify`).
    pub full: bool,
    /// Record wall-clock seconds per stage. Makes reports differ between
    /// runs.
    pub timings: bool,
}

impl ExplanationReport {
    pub fn from_run(
        config: &ExplainerConfig,
        dataset: &TabularDataset,
        model: &ModelHandle,
        anchor: &ExplainedInstance,
        run: PipelineRun,
        options: ReportOptions,
    ) -> Result<Self> {
        let sample_digest = digest(&run.samples)?;
        Ok(ExplanationReport {
            artifact_version: ARTIFACT_VERSION,
            dataset_digest: dataset.digest().to_owned(),
            config: config.clone(),
            fingerprint: config.fingerprint(),
            seed: run.seed,
            anchor: AnchorRecord {
                values: dataset.schema().row_to_json(&anchor.values),
                row_ref: anchor.row_ref,
            },
            anchor_probabilities: run.anchor_probabilities,
            blackbox: model.descriptor(),
            target_class: run.target_class,
            interpretable_features: run.input_names,
            explanation: run.explanation,
            surrogate: run.surrogate,
            fidelity: run.fidelity,
            diagnostics: run.diagnostics,
            sample_digest,
            samples: options.full.then_some(run.samples),
            stability: None,
            timings: options.timings.then(|| {
                run.timings
                    .into_iter()
                    .map(|(stage, seconds)| StageTiming {
                        stage: stage.to_owned(),
                        seconds,
                    })
                    .collect()
            }),
        })
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        to_canonical_string(self)
    }
}

/// Runs the pipeline and packages the result.
pub fn explain(
    config: &ExplainerConfig,
    dataset: &TabularDataset,
    model: &ModelHandle,
    anchor: &ExplainedInstance,
    seed: u64,
    options: ReportOptions,
) -> Result<ExplanationReport> {
    let result = run(config, dataset, model, anchor, seed)?;
    ExplanationReport::from_run(config, dataset, model, anchor, result, options)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub fingerprint_ok: bool,
    pub sample_digest_ok: bool,
    pub fidelity_ok: bool,
    pub problems: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.fingerprint_ok && self.sample_digest_ok && self.fidelity_ok
    }
}

const FIDELITY_TOLERANCE: f64 = 1e-12;

fn same_score(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= FIDELITY_TOLERANCE
}

/// Recomputes the config fingerprint, the sample digest and the fidelity
/// from a report document.
pub fn verify(report_text: &str) -> Result<Verification> {
    let document: Value = serde_json::from_str(report_text)?;
    let mut problems = Vec::new();

    let config_doc = document
        .get("config")
        .ok_or_else(|| Error::input("report has no config"))?;
    let fingerprint_ok = match validate(config_doc) {
        Ok(config) => {
            let stored = document
                .get("fingerprint")
                .and_then(Value::as_str)
                .unwrap_or_default();
            let ok = config.fingerprint() == stored;
            if !ok {
                problems.push("fingerprint does not match the embedded config".to_owned());
            }
            ok
        }
        Err(e) => {
            problems.push(format!("embedded config is invalid: {e}"));
            false
        }
    };
    if !fingerprint_ok {
        return Ok(Verification {
            fingerprint_ok,
            sample_digest_ok: false,
            fidelity_ok: false,
            problems,
        });
    }

    let report: ExplanationReport = serde_json::from_value(document)?;
    let Some(samples) = &report.samples else {
        problems.push(
            "report has no samples; re-run with --full-report to make it verifiable".to_owned(),
        );
        return Ok(Verification {
            fingerprint_ok,
            sample_digest_ok: false,
            fidelity_ok: false,
            problems,
        });
    };
    let sample_digest_ok = digest(samples)? == report.sample_digest;
    if !sample_digest_ok {
        problems.push("sample digest does not match the embedded samples".to_owned());
    }

    let fidelity_ok = match samples.check().and_then(|_| {
        let inputs = surrogate_inputs(samples, report.surrogate.uses_raw_input());
        local_fidelity(
            &report.surrogate,
            &samples.probabilities,
            &inputs,
            &samples.weights,
            report.fidelity.target_class,
        )
    }) {
        Ok(score) => {
            let stored = &report.fidelity;
            let ok = score.n_samples == stored.n_samples
                && score.degenerate == stored.degenerate
                && same_score(score.weighted_r2, stored.weighted_r2)
                && same_score(score.weighted_accuracy, stored.weighted_accuracy);
            if !ok {
                problems.push(format!(
                    "recomputed fidelity (r2 {}, accuracy {}) differs from stored (r2 {}, accuracy {})",
                    score.weighted_r2, score.weighted_accuracy, stored.weighted_r2, stored.weighted_accuracy
                ));
            }
            ok
        }
        Err(e) => {
            problems.push(format!("fidelity could not be recomputed: {e}"));
            false
        }
    };
    Ok(Verification {
        fingerprint_ok,
        sample_digest_ok,
        fidelity_ok,
        problems,
    })
}
