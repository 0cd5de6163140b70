//! Neighbourhood samplers: Gaussian around the anchor (or the global mean)
//! and mixup between the anchor and random dataset rows.
//!
//! All randomness comes from ChaCha8 streams seeded from the caller's `u64`,
//! so sample sets are identical across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::blackbox::ProbabilityMatrix;
use crate::data::{ExplainedInstance, FeatureStats, Row, TabularDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMode {
    Anchor,
    GlobalMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    Gaussian { scale: f64, center: CenterMode },
    Mixup { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub n_samples: usize,
    pub seed: u64,
}

impl SamplerConfig {
    fn check(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("sampler.n_samples must be >= 1".into()));
        }
        match self.kind {
            SamplerKind::Gaussian { scale, .. } if !(scale > 0.0 && scale.is_finite()) => Err(
                Error::Config(format!("sampler.scale must be > 0 (got {scale})")),
            ),
            SamplerKind::Mixup { alpha } if !(alpha > 0.0 && alpha.is_finite()) => Err(
                Error::Config(format!("sampler.alpha must be > 0 (got {alpha})")),
            ),
            _ => Ok(()),
        }
    }
}

/// Seeded generator for an independent stream derived from `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws rows with the configured sampler.
pub fn sample(
    config: &SamplerConfig,
    anchor: &ExplainedInstance,
    dataset: &TabularDataset,
) -> Result<Vec<Row>> {
    match config.kind {
        SamplerKind::Gaussian { .. } => sample_gaussian(config, anchor, dataset),
        SamplerKind::Mixup { .. } => sample_mixup(config, anchor, dataset),
    }
}

/// Numeric feature `j` ~ Normal(center_j, (scale * std_j)^2); categorical
/// features follow the dataset's category frequencies. Zero-variance
/// features repeat the center value.
pub fn sample_gaussian(
    config: &SamplerConfig,
    anchor: &ExplainedInstance,
    dataset: &TabularDataset,
) -> Result<Vec<Row>> {
    config.check()?;
    let SamplerKind::Gaussian { scale, center } = config.kind else {
        return Err(Error::Config(
            "sample_gaussian called with a non-gaussian sampler".into(),
        ));
    };
    dataset.schema().check_row(&anchor.values)?;
    let mut rng = rng_for(config.seed, 0);
    let stats = dataset.stats();
    let rows = (0..config.n_samples)
        .map(|_| {
            stats
                .iter()
                .enumerate()
                .map(|(j, s)| match s {
                    FeatureStats::Numeric(n) => {
                        let mu = match center {
                            CenterMode::Anchor => anchor.values[j],
                            CenterMode::GlobalMean => n.mean,
                        };
                        let sd = scale * n.std;
                        if sd > 0.0 {
                            let z: f64 = rng.sample(StandardNormal);
                            mu + sd * z
                        } else {
                            mu
                        }
                    }
                    FeatureStats::Categorical { frequencies } => {
                        draw_category(&mut rng, frequencies)
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows)
}

fn draw_category(rng: &mut ChaCha8Rng, frequencies: &[f64]) -> f64 {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (c, f) in frequencies.iter().enumerate() {
        cumulative += f;
        if u < cumulative {
            return c as f64;
        }
    }
    // Rounding left the cumulative sum just below one.
    frequencies.iter().rposition(|&f| f > 0.0).unwrap_or(0) as f64
}

/// Source of the mixing coefficient for each mixup row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSource {
    /// λ ~ Beta(alpha, alpha).
    Beta,
    /// Every row uses this λ. Test hook for the endpoint cases.
    Fixed(f64),
}

/// `x = λ·anchor + (1-λ)·partner` with a uniformly drawn dataset partner and
/// one λ ~ Beta(alpha, alpha) per row. Categorical features take the
/// anchor's category with probability λ.
pub fn sample_mixup(
    config: &SamplerConfig,
    anchor: &ExplainedInstance,
    dataset: &TabularDataset,
) -> Result<Vec<Row>> {
    sample_mixup_with(config, anchor, dataset, LambdaSource::Beta)
}

pub fn sample_mixup_with(
    config: &SamplerConfig,
    anchor: &ExplainedInstance,
    dataset: &TabularDataset,
    lambda: LambdaSource,
) -> Result<Vec<Row>> {
    Ok(mixup_rows(config, anchor, dataset, lambda)?
        .into_iter()
        .map(|m| m.row)
        .collect())
}

/// One mixup draw with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct MixupDraw {
    pub row: Row,
    pub partner: usize,
    pub lambda: f64,
}

pub fn mixup_rows(
    config: &SamplerConfig,
    anchor: &ExplainedInstance,
    dataset: &TabularDataset,
    lambda: LambdaSource,
) -> Result<Vec<MixupDraw>> {
    config.check()?;
    let SamplerKind::Mixup { alpha } = config.kind else {
        return Err(Error::Config(
            "sample_mixup called with a non-mixup sampler".into(),
        ));
    };
    if let LambdaSource::Fixed(l) = lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::input(format!("fixed lambda {l} outside [0, 1]")));
        }
    }
    dataset.schema().check_row(&anchor.values)?;
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Config(format!("sampler.alpha: {e}")))?;
    let schema = dataset.schema();
    let mut rng = rng_for(config.seed, 1);
    let mut out = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        let partner = rng.random_range(0..dataset.n_rows());
        let lam = match lambda {
            LambdaSource::Fixed(l) => l,
            LambdaSource::Beta => beta_symmetric(&mut rng, &gamma),
        };
        let other = dataset.row(partner);
        let row = anchor
            .values
            .iter()
            .zip(other)
            .enumerate()
            .map(|(j, (&a, &p))| {
                if schema.feature(j).is_numeric() {
                    (lam * a + (1.0 - lam) * p).clamp(a.min(p), a.max(p))
                } else {
                    let u: f64 = rng.random();
                    if u < lam {
                        a
                    } else {
                        p
                    }
                }
            })
            .collect();
        out.push(MixupDraw {
            row,
            partner,
            lambda: lam,
        });
    }
    Ok(out)
}

/// Beta(alpha, alpha) as the ratio X / (X + Y) of two Gamma(alpha, 1) draws.
fn beta_symmetric(rng: &mut ChaCha8Rng, gamma: &Gamma<f64>) -> f64 {
    let x = gamma.sample(rng);
    let y = gamma.sample(rng);
    let total = x + y;
    if total > 0.0 {
        x / total
    } else {
        // Both draws underflowed (tiny alpha): the mass sits at the endpoints.
        f64::from(u8::from(rng.random::<bool>()))
    }
}

/// Draws `n` values from Beta(alpha, alpha).
pub fn beta_draws(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Config(format!("alpha: {e}")))?;
    let mut rng = rng_for(seed, 2);
    Ok((0..n).map(|_| beta_symmetric(&mut rng, &gamma)).collect())
}

/// Row-aligned neighbourhood data the surrogate is trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub rows: Vec<Row>,
    pub encodings: Vec<Vec<u8>>,
    pub probabilities: ProbabilityMatrix,
    pub distances: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.rows.len();
        if self.encodings.len() != n
            || self.probabilities.n_rows() != n
            || self.distances.len() != n
            || self.weights.len() != n
        {
            return Err(Error::input("sample set collections differ in length"));
        }
        if self.distances.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::input("sample distances must be >= 0"));
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
            return Err(Error::input("sample weights must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Encodings as a dense 0/1 design matrix.
    pub fn design(&self) -> Vec<Vec<f64>> {
        self.encodings
            .iter()
            .map(|bits| bits.iter().map(|&b| f64::from(b)).collect())
            .collect()
    }
}
