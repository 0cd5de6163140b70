//! Distances between rows and the kernel that turns them into sample weights.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureStats, Row, Schema, TabularDataset};
use crate::error::{Error, Result};

/// Gower-style mixed distance: the mean over features of `|a - b| / range`
/// for numeric features (0 when the range is 0, capped at 1) and a 0/1
/// mismatch for categorical features. Always within `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GowerMetric {
    /// `None` marks a categorical feature.
    ranges: Vec<Option<f64>>,
}

impl GowerMetric {
    pub fn from_dataset(dataset: &TabularDataset) -> Self {
        GowerMetric {
            ranges: dataset
                .stats()
                .iter()
                .map(|s| match s {
                    FeatureStats::Numeric(n) => Some(n.range()),
                    FeatureStats::Categorical { .. } => None,
                })
                .collect(),
        }
    }

    /// Ranges taken from the given rows (e.g. a k-NN training set).
    pub fn from_rows(schema: &Schema, rows: &[Row]) -> Self {
        GowerMetric {
            ranges: schema
                .features()
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    f.is_numeric().then(|| {
                        let (lo, hi) = rows
                            .iter()
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                                (lo.min(r[j]), hi.max(r[j]))
                            });
                        if rows.is_empty() {
                            0.0
                        } else {
                            hi - lo
                        }
                    })
                })
                .collect(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.ranges.len() || b.len() != self.ranges.len() {
            return Err(Error::input(format!(
                "distance between rows of width {} and {} under a {}-feature metric",
                a.len(),
                b.len(),
                self.ranges.len()
            )));
        }
        if a.iter().chain(b).any(|v| v.is_nan()) {
            return Err(Error::input("NaN in distance input"));
        }
        Ok(self.distance_unchecked(a, b))
    }

    pub(crate) fn distance_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let total: f64 = self
            .ranges
            .iter()
            .zip(a.iter().zip(b))
            .map(|(range, (x, y))| match range {
                None => f64::from(u8::from(x != y)),
                Some(r) if *r > 0.0 => ((x - y).abs() / r).min(1.0),
                Some(_) => 0.0,
            })
            .sum();
        total / self.ranges.len() as f64
    }
}

/// Mixed distance using the dataset's numeric ranges.
pub fn mixed_distance(a: &[f64], b: &[f64], dataset: &TabularDataset) -> Result<f64> {
    GowerMetric::from_dataset(dataset).distance(a, b)
}

/// Fraction of positions where two binary vectors differ.
pub fn hamming_distance(a: &[u8], b: &[u8]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let differ = a.iter().zip(b).filter(|(x, y)| x != y).count();
    differ as f64 / a.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    GowerMixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceDomain {
    /// Mixed distance on raw feature values.
    Original,
    /// Hamming distance on the interpretable encodings.
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub width: f64,
    pub metric: DistanceMetric,
}

/// `exp(-d² / w²)` for every distance, floored at the smallest positive
/// double so far samples keep a (negligible) nonzero weight.
pub fn kernel_weights(distances: &[f64], kernel: &KernelConfig) -> Result<Vec<f64>> {
    let w = kernel.width;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Config(format!("kernel.width must be > 0 (got {w})")));
    }
    distances
        .iter()
        .map(|&d| {
            if d.is_nan() || d < 0.0 {
                Err(Error::input(format!("invalid distance {d}")))
            } else {
                Ok((-(d * d) / (w * w)).exp().max(f64::MIN_POSITIVE))
            }
        })
        .collect()
}
