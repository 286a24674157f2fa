use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::SpectrumError;

/// `L²(R)`-normalized Hermite function `φ_j(x)`.
pub fn hermite_eval(j: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for k in 0..j {
        let next = x * (2.0 / (k + 1) as f64).sqrt() * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `φ_0(x), ..., φ_{count-1}(x)`.
pub fn hermite_all(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for k in 0..count {
        out.push(cur);
        let next = x * (2.0 / (k + 1) as f64).sqrt() * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Hermite functions tabulated at Gauss-Hermite nodes, with weights scaled so
/// that `∫ g φ_j ≈ Σ_q W_q g(x_q) φ_j(x_q)`.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    modes: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    table: Vec<Vec<f64>>,
}

impl HermiteBasis {
    pub fn new(modes: usize, q: usize) -> Result<Self, SpectrumError> {
        if modes == 0 || q < 2 * modes {
            return Err(SpectrumError::QuadratureTooSmall { modes, q });
        }
        let nodes = gauss_hermite_nodes(q);
        let weights = nodes
            .iter()
            .map(|&x| 1.0 / hermite_all(q, x).iter().map(|v| v * v).sum::<f64>())
            .collect();
        let table = nodes.iter().map(|&x| hermite_all(modes, x)).collect();
        Ok(Self { modes, nodes, weights, table })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `⟨φ_i, φ_k⟩` under the quadrature.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.modes]; self.modes];
        for (row, w) in self.table.iter().zip(&self.weights) {
            for i in 0..self.modes {
                for k in 0..self.modes {
                    g[i][k] += w * row[i] * row[k];
                }
            }
        }
        g
    }

    /// Max entry of `|Gram - I|`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.gram();
        let mut dev: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                dev = dev.max((v - if i == k { 1.0 } else { 0.0 }).abs());
            }
        }
        dev
    }

    /// Hermite coefficients of `g` given its values at the nodes.
    pub fn analyze_x(&self, values: &[Complex64]) -> Result<Vec<Complex64>, SpectrumError> {
        if values.len() != self.nodes.len() {
            return Err(SpectrumError::LengthMismatch { expected: self.nodes.len(), got: values.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.modes];
        for ((row, w), v) in self.table.iter().zip(&self.weights).zip(values) {
            for (o, phi) in out.iter_mut().zip(row) {
                *o += v * (w * phi);
            }
        }
        Ok(out)
    }

    /// `Σ_j c_j φ_j(x)` at the given points.
    pub fn synthesize_x(&self, coeffs: &[Complex64], xs: &[f64]) -> Vec<Complex64> {
        xs.iter()
            .map(|&x| hermite_all(coeffs.len(), x).iter().zip(coeffs).map(|(p, c)| c * p).sum())
            .collect()
    }
}

/// Roots of `H_q` from the Jacobi matrix, polished by Newton steps on `φ_q`.
fn gauss_hermite_nodes(q: usize) -> Vec<f64> {
    let mut jac = DMatrix::<f64>::zeros(q, q);
    for k in 1..q {
        let v = (k as f64 / 2.0).sqrt();
        jac[(k, k - 1)] = v;
        jac[(k - 1, k)] = v;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    for x in &mut nodes {
        for _ in 0..3 {
            let phi = hermite_all(q + 1, *x);
            let d = (2.0 * q as f64).sqrt() * phi[q - 1] - *x * phi[q];
            if d == 0.0 {
                break;
            }
            *x -= phi[q] / d;
        }
    }
    nodes
}

/// Max over a grid on `|x| <= sqrt(2j+1) + 4` of `|-φ_j'' + x²φ_j - (2j+1)φ_j|`,
/// with `φ_j''` from a five-point difference of step `1e-3`.
pub fn check_eigenrelation(j: usize) -> f64 {
    let h = 1e-3;
    let half = (2.0 * j as f64 + 1.0).sqrt() + 4.0;
    let lambda = 2.0 * j as f64 + 1.0;
    (0..=400)
        .map(|i| {
            let x = -half + 2.0 * half * i as f64 / 400.0;
            let f = |y: f64| hermite_eval(j, y);
            let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
            (-d2 + x * x * f(x) - lambda * f(x)).abs()
        })
        .fold(0.0, f64::max)
}
