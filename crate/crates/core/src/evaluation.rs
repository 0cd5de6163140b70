//! Fidelity, cross-seed stability and representation diagnostics.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::blackbox::{argmax, ModelHandle, ProbabilityMatrix};
use crate::config::ExplainerConfig;
use crate::data::{ExplainedInstance, Row, Schema, TabularDataset};
use crate::error::{Error, Result};
use crate::explain::surrogate::Surrogate;
use crate::pipeline;
use crate::representation::{bin_index, Encoder, FeatureBins};

/// Weighted agreement between surrogate and black box on the sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityScore {
    /// `-inf` (serialised as null) when the target has zero weighted
    /// variance but the surrogate does not reproduce it.
    #[serde(serialize_with = "ser_r2", deserialize_with = "de_r2")]
    pub weighted_r2: f64,
    /// Set when the target has zero weighted variance.
    pub degenerate: bool,
    pub weighted_accuracy: f64,
    pub n_samples: usize,
    pub target_class: usize,
}

fn ser_r2<S: Serializer>(value: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_finite() {
        serializer.serialize_f64(*value)
    } else {
        serializer.serialize_none()
    }
}

fn de_r2<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::NEG_INFINITY))
}

/// Relative size below which a weighted sum of squares counts as zero.
const ZERO_VARIANCE: f64 = 1e-12;

/// Weighted R² of the surrogate against the target-class probability and
/// weighted prediction agreement.
///
/// Agreement compares argmax classes for a tree surrogate and the 0.5
/// threshold of the target probability for a linear one.
pub fn local_fidelity(
    surrogate: &Surrogate,
    outputs: &ProbabilityMatrix,
    inputs: &[Vec<f64>],
    weights: &[f64],
    target_class: usize,
) -> Result<FidelityScore> {
    let n = inputs.len();
    if n == 0 {
        return Err(Error::input("fidelity needs at least one sample"));
    }
    if outputs.n_rows() != n || weights.len() != n {
        return Err(Error::input("fidelity inputs are not row-aligned"));
    }
    if target_class >= outputs.n_classes() {
        return Err(Error::input(format!(
            "target class {target_class} out of range"
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::input("fidelity weights sum to zero"));
    }
    let y = outputs.column(target_class);
    let mean = y.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut agree = 0.0;
    for (i, row) in inputs.iter().enumerate() {
        let w = weights[i];
        let predicted = surrogate.predict_target(row, target_class);
        ss_res += w * (y[i] - predicted).powi(2);
        ss_tot += w * (y[i] - mean).powi(2);
        let matches = match surrogate {
            Surrogate::Linear(_) => (predicted >= 0.5) == (y[i] >= 0.5),
            Surrogate::Tree(tree) => argmax(tree.predict(row)) == argmax(outputs.row(i)),
        };
        if matches {
            agree += w;
        }
    }
    let degenerate = ss_tot <= ZERO_VARIANCE * total;
    let weighted_r2 = if degenerate {
        if ss_res <= ZERO_VARIANCE * total {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(FidelityScore {
        weighted_r2,
        degenerate,
        weighted_accuracy: (agree / total).clamp(0.0, 1.0),
        n_samples: n,
        target_class,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStability {
    pub feature: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub fingerprint: String,
    /// Ascending.
    pub seeds: Vec<u64>,
    pub runs: usize,
    pub top_k: usize,
    /// Set when `top_k` exceeded the number of interpretable features of
    /// some run and was reduced for it.
    pub k_clamped: bool,
    pub mean_jaccard: f64,
    pub features: Vec<FeatureStability>,
}

/// Named attributions of one run, in interpretable-feature order.
pub type Attributions = Vec<(String, f64)>;

/// Aggregates per-seed attribution vectors. `runs` must be sorted by seed.
pub fn aggregate_stability(
    fingerprint: &str,
    seeds: &[u64],
    runs: &[Attributions],
    k: usize,
) -> Result<StabilityReport> {
    if runs.len() < 2 {
        return Err(Error::input("stability needs at least 2 seeds"));
    }
    if k == 0 {
        return Err(Error::Config("top-k must be >= 1".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for run in runs {
        for (name, _) in run {
            if !index.contains_key(name) {
                index.insert(name.clone(), order.len());
                order.push(name.clone());
            }
        }
    }
    let m = runs.len() as f64;
    // Dense matrix, one row per run; absent names count as 0.
    let matrix: Vec<Vec<f64>> = runs
        .iter()
        .map(|run| {
            let mut values = vec![0.0; order.len()];
            for (name, v) in run {
                values[index[name]] = *v;
            }
            values
        })
        .collect();
    // Shifting by the first run keeps the mean of identical values exact.
    let means: Vec<f64> = (0..order.len())
        .map(|j| {
            let first = matrix[0][j];
            first + matrix.iter().map(|r| r[j] - first).sum::<f64>() / m
        })
        .collect();
    let squares: Vec<f64> = (0..order.len())
        .map(|j| matrix.iter().map(|r| (r[j] - means[j]).powi(2)).sum())
        .collect();
    let features = order
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureStability {
            feature: name.clone(),
            mean: means[j],
            std: (squares[j] / m).sqrt(),
        })
        .collect();

    let mut k_clamped = false;
    let top: Vec<BTreeSet<&str>> = runs
        .iter()
        .map(|run| {
            if k > run.len() {
                k_clamped = true;
            }
            top_k(run, k)
        })
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..top.len() {
        for b in a + 1..top.len() {
            total += jaccard(&top[a], &top[b]);
            pairs += 1;
        }
    }
    Ok(StabilityReport {
        fingerprint: fingerprint.to_owned(),
        seeds: seeds.to_vec(),
        runs: runs.len(),
        top_k: k,
        k_clamped,
        mean_jaccard: total / pairs as f64,
        features,
    })
}

/// Names of the `k` largest |attribution| entries, ties by position.
pub fn top_k(run: &Attributions, k: usize) -> BTreeSet<&str> {
    let mut idx: Vec<usize> = (0..run.len()).collect();
    idx.sort_by(|&a, &b| run[b].1.abs().total_cmp(&run[a].1.abs()).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|i| run[i].0.as_str()).collect()
}

pub fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Runs the pipeline once per seed and aggregates the attributions.
///
/// Seeds are sorted first so the result does not depend on the order they
/// were given in; per-seed runs execute on scoped threads.
pub fn stability(
    config: &ExplainerConfig,
    dataset: &TabularDataset,
    model: &ModelHandle,
    anchor: &ExplainedInstance,
    seeds: &[u64],
    k: usize,
) -> Result<StabilityReport> {
    if seeds.len() < 2 {
        return Err(Error::input(format!(
            "stability needs at least 2 seeds (got {}); std is undefined for one run",
            seeds.len()
        )));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(sorted.len());
    let chunk = sorted.len().div_ceil(workers);
    let results: Vec<Result<Attributions>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sorted
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&seed| {
                            pipeline::run(config, dataset, model, anchor, seed)
                                .map(|r| r.attributions())
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("stability worker panicked"))
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    aggregate_stability(&config.fingerprint(), &sorted, &runs, k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureOccupancy {
    pub feature: String,
    /// Fraction of samples per quartile bin, or per category.
    pub occupancy: Vec<f64>,
    pub anchor_bin: usize,
    pub empty_bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepresentationDiagnostics {
    Quartile {
        features: Vec<FeatureOccupancy>,
        empty_bins: usize,
    },
    Tree {
        occupancy: Vec<f64>,
        anchor_leaf: usize,
        empty_leaves: usize,
    },
}

/// Share of samples in each bin (per feature) or leaf, and which of them are
/// empty.
pub fn representation_diagnostics(
    rows: &[Row],
    encoder: &Encoder,
    schema: &Schema,
    anchor: &ExplainedInstance,
) -> Result<RepresentationDiagnostics> {
    if rows.is_empty() {
        return Err(Error::input("diagnostics need at least one sample"));
    }
    let n = rows.len() as f64;
    match encoder {
        Encoder::Quartile { discretiser, .. } => {
            let mut features = Vec::with_capacity(schema.len());
            for (j, (bins, spec)) in discretiser
                .features
                .iter()
                .zip(schema.features())
                .enumerate()
            {
                let (counts, anchor_bin) = match bins {
                    FeatureBins::Quartile { boundaries, .. } => {
                        let mut counts = vec![0usize; 4];
                        for row in rows {
                            counts[bin_index(row[j], *boundaries)?] += 1;
                        }
                        (counts, bin_index(anchor.values[j], *boundaries)?)
                    }
                    FeatureBins::PassThrough => {
                        let n_categories = spec.categories().map_or(0, <[String]>::len);
                        let mut counts = vec![0usize; n_categories];
                        for row in rows {
                            counts[row[j] as usize] += 1;
                        }
                        (counts, anchor.values[j] as usize)
                    }
                };
                features.push(FeatureOccupancy {
                    feature: spec.name.clone(),
                    occupancy: counts.iter().map(|&c| c as f64 / n).collect(),
                    anchor_bin,
                    empty_bins: counts.iter().filter(|&&c| c == 0).count(),
                });
            }
            let empty_bins = features.iter().map(|f| f.empty_bins).sum();
            Ok(RepresentationDiagnostics::Quartile {
                features,
                empty_bins,
            })
        }
        Encoder::Tree { partition, encoder } => {
            let mut counts = vec![0usize; partition.n_leaves()];
            for row in rows {
                counts[partition.route(row)] += 1;
            }
            Ok(RepresentationDiagnostics::Tree {
                occupancy: counts.iter().map(|&c| c as f64 / n).collect(),
                anchor_leaf: encoder.anchor_leaf(),
                empty_leaves: counts.iter().filter(|&&c| c == 0).count(),
            })
        }
    }
}
