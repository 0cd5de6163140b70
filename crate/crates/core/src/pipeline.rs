//! The explain pipeline shared by the CLI, the service and stability runs.
//!
//! Order: fit representation, sample, query the black box, encode,
//! distances, kernel weights, feature selection, surrogate fit, extraction,
//! fidelity. A tree representation is fitted to the labelled samples, so it
//! comes after the black-box query.

use std::time::Instant;

use crate::blackbox::{argmax, ModelHandle};
use crate::config::{ExplainerConfig, RepresentationConfig, SurrogateConfig};
use crate::data::{ExplainedInstance, TabularDataset};
use crate::error::{Result, StageExt};
use crate::evaluation::{
    local_fidelity, representation_diagnostics, Attributions, FidelityScore,
    RepresentationDiagnostics,
};
use crate::explain::distance::{hamming_distance, kernel_weights, DistanceDomain, GowerMetric};
use crate::explain::selection::select_features;
use crate::explain::surrogate::{
    extract_explanation, Explanation, LinearSurrogate, Surrogate, SurrogateInput, TreeSurrogate,
};
use crate::representation::{
    fit_quartile_discretiser, fit_tree_partition, Encoder, LeafEncoder, QuartileEncoder,
};
use crate::sampling::{sample, SampleSet};
use crate::tree::{column_kinds, ColumnKind, ColumnLabels, TreeParams};

/// Everything one explain call produced.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub seed: u64,
    pub samples: SampleSet,
    pub encoder: Encoder,
    /// Names of the surrogate's input columns.
    pub input_names: Vec<String>,
    pub surrogate: Surrogate,
    pub target_class: usize,
    pub anchor_probabilities: Vec<f64>,
    pub explanation: Explanation,
    pub fidelity: FidelityScore,
    pub diagnostics: RepresentationDiagnostics,
    /// Seconds per stage, in pipeline order.
    pub timings: Vec<(&'static str, f64)>,
}

impl PipelineRun {
    /// One value per surrogate input column, keyed by its name: linear
    /// coefficients (0 when unselected) or tree impurity decrease.
    pub fn attributions(&self) -> Attributions {
        let values = self.surrogate.attributions(self.input_names.len());
        self.input_names.iter().cloned().zip(values).collect()
    }
}

/// Rows the surrogate sees: the binary encodings, or raw rows for a tree
/// surrogate fitted on raw features.
pub fn surrogate_inputs(samples: &SampleSet, surrogate_on_raw: bool) -> Vec<Vec<f64>> {
    if surrogate_on_raw {
        samples.rows.clone()
    } else {
        samples.design()
    }
}

struct Clock {
    timings: Vec<(&'static str, f64)>,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Clock {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push((stage, (now - self.last).as_secs_f64()));
        self.last = now;
    }
}

pub fn run(
    config: &ExplainerConfig,
    dataset: &TabularDataset,
    model: &ModelHandle,
    anchor: &ExplainedInstance,
    seed: u64,
) -> Result<PipelineRun> {
    let schema = dataset.schema();
    schema.check_row(&anchor.values).stage("input")?;
    let mut clock = Clock::new();

    let discretiser = match config.representation {
        RepresentationConfig::Quartile => Some(fit_quartile_discretiser(dataset)),
        RepresentationConfig::Tree { .. } => None,
    };
    clock.lap("representation");

    let rows = sample(&config.sampler_config(seed), anchor, dataset).stage("sampling")?;
    clock.lap("sampling");

    // The anchor rides along in the same batch as the samples.
    let mut batch = rows;
    batch.push(anchor.values.clone());
    let mut all = model
        .predict_proba(&batch)
        .stage("blackbox")?
        .rows()
        .to_vec();
    let anchor_probabilities = all.pop().expect("anchor row");
    batch.pop();
    let rows = batch;
    let probabilities = crate::blackbox::ProbabilityMatrix::new(all).stage("blackbox")?;
    clock.lap("blackbox");

    let encoder = match (config.representation, discretiser) {
        (RepresentationConfig::Quartile, Some(discretiser)) => {
            let encoder =
                QuartileEncoder::new(&discretiser, schema, anchor).stage("representation")?;
            Encoder::Quartile {
                discretiser,
                encoder,
            }
        }
        (
            RepresentationConfig::Tree {
                max_depth,
                min_leaf,
                encode_mode,
            },
            _,
        ) => {
            let partition = fit_tree_partition(schema, &rows, &probabilities, max_depth, min_leaf)
                .stage("representation")?;
            let encoder = LeafEncoder::new(&partition, anchor, encode_mode);
            Encoder::Tree { partition, encoder }
        }
        _ => unreachable!("quartile representation always has a discretiser"),
    };
    let encodings = rows
        .iter()
        .map(|r| encoder.encode(r))
        .collect::<Result<Vec<_>>>()
        .stage("encoding")?;
    let anchor_bits = encoder.encode(&anchor.values).stage("encoding")?;
    clock.lap("encoding");

    let distances = match config.distance_domain {
        DistanceDomain::Original => {
            let metric = GowerMetric::from_dataset(dataset);
            rows.iter()
                .map(|r| metric.distance(r, &anchor.values))
                .collect::<Result<Vec<_>>>()
        }
        DistanceDomain::Binary => Ok(encodings
            .iter()
            .map(|bits| hamming_distance(bits, &anchor_bits))
            .collect()),
    }
    .stage("distance")?;
    clock.lap("distance");

    let weights = kernel_weights(&distances, &config.kernel).stage("weighting")?;
    clock.lap("weighting");

    let samples = SampleSet {
        rows,
        encodings,
        probabilities,
        distances,
        weights,
    };
    samples.check().stage("sampling")?;

    let target_class = match &config.target_class {
        Some(class) => class.resolve(model.class_names()).stage("target")?,
        None => argmax(&anchor_probabilities),
    };

    let raw_tree = matches!(
        config.surrogate,
        SurrogateConfig::Tree {
            input: SurrogateInput::Raw,
            ..
        }
    );
    let inputs = surrogate_inputs(&samples, raw_tree);
    let (input_names, labels, kinds, anchor_input) = if raw_tree {
        (
            schema.names(),
            ColumnLabels::from_schema(schema),
            column_kinds(schema),
            anchor.values.clone(),
        )
    } else {
        let names = encoder.descriptions().to_vec();
        let labels = ColumnLabels::from_descriptions(&names);
        let kinds = vec![ColumnKind::Numeric; names.len()];
        (
            names,
            labels,
            kinds,
            anchor_bits.iter().map(|&b| f64::from(b)).collect(),
        )
    };

    let target = samples.probabilities.column(target_class);
    let columns = if raw_tree {
        (0..kinds.len()).collect()
    } else {
        select_features(
            &inputs,
            &target,
            &samples.weights,
            &config.selection,
            config.ridge(),
        )
        .stage("selection")?
    };
    clock.lap("selection");

    let surrogate = match config.surrogate {
        SurrogateConfig::Linear { ridge } => Surrogate::Linear(
            LinearSurrogate::fit(
                &inputs,
                &samples.probabilities,
                &samples.weights,
                &columns,
                ridge,
                target_class,
            )
            .stage("surrogate")?,
        ),
        SurrogateConfig::Tree {
            max_depth,
            min_leaf,
            input,
        } => Surrogate::Tree(
            TreeSurrogate::fit(
                &inputs,
                &kinds,
                &samples.probabilities,
                &samples.weights,
                &columns,
                input,
                TreeParams {
                    max_depth,
                    min_leaf,
                },
            )
            .stage("surrogate")?,
        ),
    };
    clock.lap("surrogate");

    let explanation = extract_explanation(
        &surrogate,
        &labels,
        &anchor_input,
        model.class_names(),
        target_class,
    );
    clock.lap("extraction");

    let fidelity = local_fidelity(
        &surrogate,
        &samples.probabilities,
        &inputs,
        &samples.weights,
        target_class,
    )
    .stage("fidelity")?;
    clock.lap("fidelity");

    let diagnostics =
        representation_diagnostics(&samples.rows, &encoder, schema, anchor).stage("diagnostics")?;
    clock.lap("diagnostics");

    Ok(PipelineRun {
        seed,
        samples,
        encoder,
        input_names,
        surrogate,
        target_class,
        anchor_probabilities,
        explanation,
        fidelity,
        diagnostics,
        timings: clock.timings,
    })
}
