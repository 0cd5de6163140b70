//! Weighted ridge regression with an unpenalised intercept.
//!
//! Minimises `Σ wᵢ (yᵢ - β₀ - xᵢᵀβ)² + λ‖β‖²`. Columns and target are centred
//! at their weighted means, which removes the intercept from the penalised
//! system; the remaining symmetric positive-definite normal equations are
//! solved by Cholesky factorisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl RidgeFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

pub fn fit_weighted_ridge(
    x: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    lambda: f64,
) -> Result<RidgeFit> {
    let n = x.len();
    if n == 0 {
        return Err(Error::input("ridge regression needs at least one row"));
    }
    if y.len() != n || weights.len() != n {
        return Err(Error::input("ridge inputs are not row-aligned"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "ridge penalty must be >= 0 (got {lambda})"
        )));
    }
    let p = x[0].len();
    if x.iter().any(|r| r.len() != p) {
        return Err(Error::input("ridge design rows differ in width"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::input(
            "ridge weights must be finite and non-negative",
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::input("ridge weights are all zero"));
    }

    let mut x_mean = vec![0.0; p];
    let mut y_mean = 0.0;
    for ((row, &yi), &w) in x.iter().zip(y).zip(weights) {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += w * v;
        }
        y_mean += w * yi;
    }
    for m in &mut x_mean {
        *m /= total;
    }
    y_mean /= total;

    // Lower triangle of XcᵀWXc + λI and right-hand side XcᵀWyc.
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut centred = vec![0.0; p];
    for ((row, &yi), &w) in x.iter().zip(y).zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (c, (v, m)) in centred.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = yi - y_mean;
        for i in 0..p {
            let wi = w * centred[i];
            rhs[i] += wi * yc;
            for j in 0..=i {
                gram[i * p + j] += wi * centred[j];
            }
        }
    }
    for i in 0..p {
        gram[i * p + i] += lambda;
    }

    let coefficients = cholesky_solve(&mut gram, &mut rhs, p).ok_or_else(|| {
        Error::Solver(if lambda == 0.0 {
            "normal equations are singular; use a ridge penalty > 0".to_owned()
        } else {
            "normal equations are numerically singular".to_owned()
        })
    })?;
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    Ok(RidgeFit {
        intercept,
        coefficients,
    })
}

/// Solves `A x = b` in place for symmetric positive-definite `A` given by its
/// lower triangle (row-major, `p × p`). Returns `None` on a non-positive or
/// negligible pivot.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], p: usize) -> Option<Vec<f64>> {
    let scale = (0..p)
        .map(|i| a[i * p + i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d > 1e-12 * scale) {
            return None;
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    // L z = b
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * p + k] * b[k];
        }
        b[i] = s / a[i * p + i];
    }
    // Lᵀ x = z
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= a[k * p + i] * b[k];
        }
        b[i] = s / a[i * p + i];
    }
    Some(b.to_vec())
}

/// Weighted residual sum of squares of a fit.
pub fn weighted_rss(fit: &RidgeFit, x: &[Vec<f64>], y: &[f64], weights: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(weights)
        .map(|((row, yi), w)| {
            let r = yi - fit.predict(row);
            w * r * r
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_gives_intercept_only() {
        let x = vec![
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, 0.0],
        ];
        let fit = fit_weighted_ridge(&x, &[0.7; 4], &[1.0, 2.0, 0.5, 1.0], 0.1).unwrap();
        assert!((fit.intercept - 0.7).abs() < 1e-15);
        assert!(fit.coefficients.iter().all(|b| b.abs() < 1e-15));
    }

    #[test]
    fn exact_interpolation_of_single_binary_column() {
        let x = vec![vec![0.0], vec![1.0], vec![1.0], vec![0.0]];
        let y = [0.0, 1.0, 1.0, 0.0];
        let fit = fit_weighted_ridge(&x, &y, &[1.0; 4], 0.0).unwrap();
        assert!(fit.intercept.abs() < 1e-15);
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_columns_without_penalty_are_singular() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let err = fit_weighted_ridge(&x, &[0.0, 1.0, 2.0], &[1.0; 3], 0.0).unwrap_err();
        assert!(matches!(err, Error::Solver(ref m) if m.contains("penalty")));
        assert!(fit_weighted_ridge(&x, &[0.0, 1.0, 2.0], &[1.0; 3], 0.01).is_ok());
    }

    #[test]
    fn intercept_is_not_penalised() {
        // A huge penalty kills the slope but leaves the weighted mean.
        let x = vec![vec![0.0], vec![1.0]];
        let fit = fit_weighted_ridge(&x, &[10.0, 12.0], &[3.0, 1.0], 1e12).unwrap();
        assert!((fit.intercept - 10.5).abs() < 1e-6);
        assert!(fit.coefficients[0].abs() < 1e-9);
    }

    #[test]
    fn no_columns_gives_weighted_mean() {
        let x = vec![vec![], vec![]];
        let fit = fit_weighted_ridge(&x, &[1.0, 4.0], &[2.0, 1.0], 0.0).unwrap();
        assert_eq!(fit.intercept, 2.0);
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let x = vec![vec![0.0], vec![1.0], vec![5.0]];
        let y = [0.0, 2.0, -100.0];
        let fit = fit_weighted_ridge(&x, &y, &[1.0, 1.0, 0.0], 0.0).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_weights_are_rejected() {
        assert!(fit_weighted_ridge(&[vec![1.0]], &[1.0], &[0.0], 0.1).is_err());
    }
}
