//! Endpoint-corrected trapezoid rules (Gregory type) for non-periodic
//! integrands on uniform grids.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Bernoulli numbers `B_0..=B_m` with `B_1 = -1/2`.
pub(crate) fn bernoulli(m: usize) -> Vec<BigRational> {
    let mut b = vec![BigRational::one()];
    for n in 1..=m {
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from((n + 1 - k) as i64) / BigInt::from((k + 1) as i64);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from((n + 1) as i64)));
    }
    b
}

/// Corrections `δ_0..δ_{p-1}` such that `Σ_k (1 + δ_k) g(k)` (with the
/// corrections applied at one end) integrates `x^r` exactly relative to the
/// half-line integral for `r < p`.
pub(crate) fn gregory_corrections(p: usize) -> Vec<BigRational> {
    let b = bernoulli(p);
    let rhs: Vec<BigRational> = (0..p)
        .map(|r| {
            if r == 0 {
                rational(-1, 2)
            } else {
                let sign = if r % 2 == 0 { -1 } else { 1 };
                b[r + 1].clone() * rational(sign, (r + 1) as i64)
            }
        })
        .collect();
    let mut a: Vec<Vec<BigRational>> = (0..p)
        .map(|r| (0..p).map(|k| BigRational::from_integer(BigInt::from(k as i64).pow(r as u32))).collect())
        .collect();
    for (row, v) in a.iter_mut().zip(rhs) {
        row.push(v);
    }
    for col in 0..p {
        let piv = (col..p).find(|&r| !a[r][col].is_zero()).expect("Vandermonde system is nonsingular");
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= inv.clone();
        }
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=p {
                    let sub = factor.clone() * a[col][c].clone();
                    a[r][c] -= sub;
                }
            }
        }
    }
    a.into_iter().map(|row| row[p].clone()).collect()
}

/// Weights of the corrected rule on `m + 1` equispaced nodes with spacing `h`.
#[derive(Debug, Clone)]
pub(crate) struct GregoryRule {
    corrections: Vec<f64>,
}

impl GregoryRule {
    pub(crate) fn new(p: usize) -> Self {
        Self { corrections: gregory_corrections(p).iter().map(|r| r.to_f64().unwrap_or(0.0)).collect() }
    }

    /// Weight of node `k` out of `0..=m` (unit spacing); needs `m >= 2p`.
    pub(crate) fn weight(&self, k: usize, m: usize) -> f64 {
        let p = self.corrections.len();
        if k < p {
            1.0 + self.corrections[k]
        } else if m - k < p {
            1.0 + self.corrections[m - k]
        } else {
            1.0
        }
    }
}
