//! Small least-squares helpers.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`; needs two distinct `x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys).take(n) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * n as f64 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys).take(n) {
        ss_res += (y - intercept - slope * x).powi(2);
        ss_tot += (y - my).powi(2);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(LineFit { intercept, slope, r2 })
}

/// Least-squares coefficients for the design `rows` (one row per sample).
pub fn least_squares(rows: &[Vec<f64>], ys: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    if rows.len() < p || rows.len() != ys.len() {
        return None;
    }
    // column scaling keeps the SVD well conditioned when regressors differ in size
    let scale: Vec<f64> = (0..p)
        .map(|c| rows.iter().map(|r| r[c].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE))
        .collect();
    let a = DMatrix::from_fn(rows.len(), p, |i, c| rows[i][c] / scale[c]);
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax {
        return None;
    }
    let x = svd.solve(&b, 0.0).ok()?;
    Some(x.iter().zip(&scale).map(|(v, s)| v / s).collect())
}
