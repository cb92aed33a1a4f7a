//! Small estimators used by the Monte Carlo layers.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Delete-one-block jackknife of `f` applied to column means.
/// `rows[i]` is one observation vector; returns (estimate, error).
pub fn jackknife<F>(rows: &[Vec<f64>], blocks: usize, f: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let total: Vec<f64> = (0..width).map(|c| rows.iter().map(|r| r[c]).sum()).collect();
    let full = f(&total.iter().map(|t| t / n as f64).collect::<Vec<_>>());
    let blocks = blocks.min(n);
    if blocks < 2 {
        return (full, 0.0);
    }
    let size = n / blocks;
    let estimates: Vec<f64> = (0..blocks)
        .map(|b| {
            let (lo, hi) = (b * size, if b + 1 == blocks { n } else { (b + 1) * size });
            let kept = (n - (hi - lo)) as f64;
            let means: Vec<f64> = (0..width)
                .map(|c| (total[c] - rows[lo..hi].iter().map(|r| r[c]).sum::<f64>()) / kept)
                .collect();
            f(&means)
        })
        .collect();
    let m = mean(&estimates);
    let var = estimates.iter().map(|e| (e - m).powi(2)).sum::<f64>() * (blocks - 1) as f64 / blocks as f64;
    (full, var.sqrt())
}

/// Indices of one bootstrap resample of `n` items.
pub fn resample(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Weighted least squares `y ~ X beta` with per-point standard deviations.
/// Returns coefficients and their standard errors.
pub fn weighted_least_squares(design: &[Vec<f64>], y: &[f64], sigma: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    if design.len() != n || sigma.len() != n {
        return Err(Error::LengthMismatch(design.len().min(sigma.len()), n));
    }
    let k = design.first().map_or(0, Vec::len);
    if n < k || k == 0 {
        return Err(Error::InvalidArgument(format!("{n} points for {k} parameters")));
    }
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / s.max(1e-300)).collect();
    let a = DMatrix::from_fn(n, k, |i, j| design[i][j] * w[i]);
    let b = DVector::from_fn(n, |i, _| y[i] * w[i]);
    let ata = a.transpose() * &a;
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular design matrix".into()))?;
    let beta = &inv * a.transpose() * b;
    let errors = (0..k).map(|j| inv[(j, j)].max(0.0).sqrt()).collect();
    Ok((beta.iter().copied().collect(), errors))
}

/// Unweighted straight line; returns (slope, intercept).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let design: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi]).collect();
    let (beta, _) = weighted_least_squares(&design, y, &vec![1.0; y.len()])?;
    Ok((beta[1], beta[0]))
}

/// Root of the line through `(x0, y0)` and `(x1, y1)`.
pub fn interpolate_root(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    if y1 == y0 {
        return 0.5 * (x0 + x1);
    }
    x0 - y0 * (x1 - x0) / (y1 - y0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_mean_matches_standard_error() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let (m, e) = jackknife(&rows, 40, |v| v[0]);
        assert!((m - mean(&xs)).abs() < 1e-14);
        assert!((e - std_error(&xs)).abs() < 1e-12);
    }

    #[test]
    fn wls_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (slope, icpt) = linear_fit(&x, &y).unwrap();
        assert!((slope + 0.5).abs() < 1e-12 && (icpt - 2.0).abs() < 1e-12);
    }

    #[test]
    fn root() {
        assert!((interpolate_root(0.0, -1.0, 2.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
