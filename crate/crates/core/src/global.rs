//! Dataset-level explainers: permutation importance, individual conditional
//! expectation and partial dependence.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::blackbox::ModelHandle;
use crate::data::{Row, TabularDataset};
use crate::error::{Error, Result};
use crate::sampling::rng_for;

/// Streams below this offset are used by the samplers.
const PERMUTATION_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMetric {
    Accuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub index: usize,
    /// `baseline - permuted` per repeat.
    pub drops: Vec<f64>,
    pub mean_drop: f64,
    pub std_drop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationImportanceResult {
    pub metric: ImportanceMetric,
    pub baseline: f64,
    pub n_repeats: usize,
    pub seed: u64,
    pub features: Vec<FeatureImportance>,
}

fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

/// Drop in accuracy when one column is shuffled, per feature and repeat.
///
/// Each feature draws its permutations from its own stream derived from
/// `(seed, feature)`. The dataset is never modified; every repeat works on
/// a copy and all repeats of a feature go to the model in one batch.
pub fn permutation_importance(
    model: &ModelHandle,
    dataset: &TabularDataset,
    labels: &[usize],
    metric: ImportanceMetric,
    n_repeats: usize,
    seed: u64,
) -> Result<PermutationImportanceResult> {
    let n = dataset.n_rows();
    if n == 0 || labels.is_empty() {
        return Err(Error::input("accuracy is undefined on empty data"));
    }
    if labels.len() != n {
        return Err(Error::input(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= model.n_classes()) {
        return Err(Error::input(format!(
            "label {bad} out of range for {} classes",
            model.n_classes()
        )));
    }
    if n_repeats == 0 {
        return Err(Error::Config("n_repeats must be >= 1".into()));
    }
    let ImportanceMetric::Accuracy = metric;
    let baseline = accuracy(&model.predict_proba(dataset.rows())?.argmax(), labels);

    let mut features = Vec::with_capacity(dataset.n_features());
    for (j, spec) in dataset.schema().features().iter().enumerate() {
        let mut rng = rng_for(seed, PERMUTATION_STREAM_BASE + j as u64);
        let column = dataset.column(j);
        let mut batch: Vec<Row> = Vec::with_capacity(n * n_repeats);
        for _ in 0..n_repeats {
            let mut shuffled = column.clone();
            shuffled.shuffle(&mut rng);
            batch.extend(dataset.rows().iter().zip(&shuffled).map(|(row, &v)| {
                let mut r = row.clone();
                r[j] = v;
                r
            }));
        }
        let predicted = model.predict_proba(&batch)?.argmax();
        let drops: Vec<f64> = predicted
            .chunks(n)
            .map(|p| baseline - accuracy(p, labels))
            .collect();
        let mean_drop = drops.iter().sum::<f64>() / n_repeats as f64;
        let std_drop =
            (drops.iter().map(|d| (d - mean_drop).powi(2)).sum::<f64>() / n_repeats as f64).sqrt();
        features.push(FeatureImportance {
            feature: spec.name.clone(),
            index: j,
            drops,
            mean_drop,
            std_drop,
        });
    }
    Ok(PermutationImportanceResult {
        metric,
        baseline,
        n_repeats,
        seed,
        features,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    Explicit(Vec<f64>),
    /// Evenly spaced points from the feature's observed minimum to maximum.
    Points(usize),
}

pub const DEFAULT_GRID_POINTS: usize = 20;

impl std::default::Default for GridSpec {
    fn default() -> Self {
        GridSpec::Points(DEFAULT_GRID_POINTS)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IceCurves {
    pub feature: usize,
    pub feature_name: String,
    pub target_class: usize,
    pub target_name: String,
    /// Strictly ascending.
    pub grid: Vec<f64>,
    /// One row per dataset row, one column per grid point.
    pub curves: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdCurve {
    pub feature: usize,
    pub feature_name: String,
    pub target_class: usize,
    pub target_name: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Partial dependence together with the curves it averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdResult {
    pub pd: PdCurve,
    pub ice: IceCurves,
}

fn resolve_grid(spec: &GridSpec, dataset: &TabularDataset, feature: usize) -> Result<Vec<f64>> {
    match spec {
        GridSpec::Explicit(values) => {
            if values.is_empty() {
                return Err(Error::input("grid is empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::input("grid values must be finite"));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::input("grid must be strictly ascending"));
            }
            Ok(values.clone())
        }
        GridSpec::Points(0) => Err(Error::input("grid needs at least 1 point")),
        GridSpec::Points(count) => {
            let stats = dataset.stats()[feature].numeric().expect("numeric feature");
            let (lo, hi) = (stats.min, stats.max);
            if *count == 1 || lo == hi {
                // A constant feature has a single distinct grid value.
                return Ok(vec![lo]);
            }
            let step = (hi - lo) / (*count - 1) as f64;
            let mut grid: Vec<f64> = (0..*count).map(|i| lo + step * i as f64).collect();
            grid[*count - 1] = hi;
            Ok(grid)
        }
    }
}

/// Target-class probability of every row with `feature` overwritten by each
/// grid value. Rows go to the model in one batch.
pub fn ice_curves(
    model: &ModelHandle,
    dataset: &TabularDataset,
    feature: usize,
    grid: &GridSpec,
    target_class: usize,
) -> Result<IceCurves> {
    let schema = dataset.schema();
    if feature >= schema.len() {
        return Err(Error::input(format!(
            "feature index {feature} out of range"
        )));
    }
    let spec = schema.feature(feature);
    if !spec.is_numeric() {
        return Err(Error::Unsupported(format!(
            "ICE/PD need a numeric feature; {:?} is categorical",
            spec.name
        )));
    }
    if target_class >= model.n_classes() {
        return Err(Error::input(format!(
            "target class {target_class} out of range"
        )));
    }
    let grid = resolve_grid(grid, dataset, feature)?;
    let g = grid.len();
    let mut batch: Vec<Row> = Vec::with_capacity(dataset.n_rows() * g);
    for row in dataset.rows() {
        for &v in &grid {
            let mut r = row.clone();
            r[feature] = v;
            batch.push(r);
        }
    }
    let probabilities = model.predict_proba(&batch)?;
    let curves = probabilities
        .rows()
        .chunks(g)
        .map(|chunk| chunk.iter().map(|p| p[target_class]).collect())
        .collect();
    Ok(IceCurves {
        feature,
        feature_name: spec.name.clone(),
        target_class,
        target_name: model.class_names()[target_class].clone(),
        grid,
        curves,
    })
}

/// Unweighted mean of the ICE curves at each grid point.
pub fn partial_dependence(ice: &IceCurves) -> Result<PdCurve> {
    if ice.curves.is_empty() {
        return Err(Error::input("no ICE curves to average"));
    }
    let m = ice.curves.len() as f64;
    let values = (0..ice.grid.len())
        .map(|g| ice.curves.iter().map(|c| c[g]).sum::<f64>() / m)
        .collect();
    Ok(PdCurve {
        feature: ice.feature,
        feature_name: ice.feature_name.clone(),
        target_class: ice.target_class,
        target_name: ice.target_name.clone(),
        grid: ice.grid.clone(),
        values,
    })
}
