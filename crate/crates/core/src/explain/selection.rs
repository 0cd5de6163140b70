use serde::{Deserialize, Serialize};

use super::ridge::{fit_weighted_ridge, weighted_rss};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    None,
    HighestWeight,
    ForwardSelection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelectionConfig {
    pub method: SelectionMethod,
    pub k: usize,
}

/// Chooses interpretable columns; indices are returned ascending.
///
/// `highest_weight` keeps the `k` largest `|coefficient|` of a weighted ridge
/// fit on all columns; `forward_selection` greedily adds the column whose
/// ridge fit has the smallest weighted RSS. `k` above the column count keeps
/// every column. Ties go to the lower column index.
pub fn select_features(
    x: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    config: &FeatureSelectionConfig,
    ridge: f64,
) -> Result<Vec<usize>> {
    if config.k == 0 {
        return Err(Error::Config("selection.k must be >= 1".into()));
    }
    let width = x.first().map_or(0, Vec::len);
    if config.method == SelectionMethod::None || config.k >= width {
        return Ok((0..width).collect());
    }
    let mut chosen = match config.method {
        SelectionMethod::None => unreachable!(),
        SelectionMethod::HighestWeight => {
            let fit = fit_weighted_ridge(x, y, weights, ridge)?;
            let mut order: Vec<usize> = (0..width).collect();
            order.sort_by(|&a, &b| {
                fit.coefficients[b]
                    .abs()
                    .total_cmp(&fit.coefficients[a].abs())
                    .then(a.cmp(&b))
            });
            order.truncate(config.k);
            order
        }
        SelectionMethod::ForwardSelection => forward_selection(x, y, weights, config.k, ridge)?,
    };
    chosen.sort_unstable();
    Ok(chosen)
}

fn forward_selection(
    x: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    k: usize,
    ridge: f64,
) -> Result<Vec<usize>> {
    let width = x[0].len();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for candidate in (0..width).filter(|c| !chosen.contains(c)) {
            let mut columns = chosen.clone();
            columns.push(candidate);
            let sub = project(x, &columns);
            let fit = fit_weighted_ridge(&sub, y, weights, ridge)?;
            let rss = weighted_rss(&fit, &sub, y, weights);
            if best.is_none_or(|(b, _)| rss < b) {
                best = Some((rss, candidate));
            }
        }
        match best {
            Some((_, c)) => chosen.push(c),
            None => break,
        }
    }
    Ok(chosen)
}

/// Keeps only `columns` of every row, in the given order.
pub fn project(x: &[Vec<f64>], columns: &[usize]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|r| columns.iter().map(|&c| r[c]).collect())
        .collect()
}
