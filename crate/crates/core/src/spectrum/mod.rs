//! Spectral models for the elliptic operator `P`: the harmonic oscillator
//! `-d²/dx² + x²`, its integer powers, the `n`-dimensional oscillator, and
//! user-supplied eigenvalue tables.

mod hermite;

use std::io::{Read, Write};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

pub use hermite::{check_eigenrelation, hermite_all, hermite_eval, HermiteBasis};

use crate::error::SpectrumError;
use crate::io::fmt_float;

/// Which spectral model produced an [`EigenSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Harmonic1d,
    Harmonic1dPower { k: u32 },
    HarmonicNd { n: u32 },
    Table { m: u32, n: u32 },
}

/// Eigenvalues `λ_0, λ_1, ...` sorted by nondecreasing modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSequence {
    kind: ModelKind,
    lambdas: Vec<f64>,
    m: u32,
    n: u32,
}

impl EigenSequence {
    pub fn build(kind: ModelKind, modes: usize) -> Result<Self, SpectrumError> {
        if modes == 0 {
            return Err(SpectrumError::InvalidModel("need at least one mode".into()));
        }
        let (m, n) = match kind {
            ModelKind::Harmonic1d => (2, 1),
            ModelKind::Harmonic1dPower { k } if k >= 1 => (2 * k, 1),
            ModelKind::HarmonicNd { n } if n >= 1 => (2, n),
            ModelKind::Table { .. } => {
                return Err(SpectrumError::InvalidModel("tables are built with from_table".into()))
            }
            _ => return Err(SpectrumError::InvalidModel(format!("{kind:?}"))),
        };
        let mut lambdas = Vec::with_capacity(modes);
        match kind {
            ModelKind::HarmonicNd { n } => {
                let mut q = 0u64;
                'outer: loop {
                    let mult = binomial(q + n as u64 - 1, n as u64 - 1);
                    for _ in 0..mult {
                        if lambdas.len() == modes {
                            break 'outer;
                        }
                        lambdas.push((2 * q + n as u64) as f64);
                    }
                    q += 1;
                }
            }
            _ => {
                for j in 0..modes {
                    lambdas.push(model_lambda(kind, j).expect("closed-form model"));
                }
            }
        }
        Ok(Self { kind, lambdas, m, n })
    }

    /// Wraps a user table; the values must be sorted by modulus and diverge.
    pub fn from_table(values: Vec<f64>, m: u32, n: u32) -> Result<Self, SpectrumError> {
        if values.len() < 2 {
            return Err(SpectrumError::NonDivergentTable);
        }
        if m == 0 || n == 0 {
            return Err(SpectrumError::InvalidModel("table order and dimension must be positive".into()));
        }
        for (j, w) in values.windows(2).enumerate() {
            if !(w[0].is_finite() && w[1].is_finite()) || w[1].abs() < w[0].abs() {
                return Err(SpectrumError::UnsortedTable(j + 1));
            }
        }
        if values[values.len() - 1].abs() <= values[0].abs() {
            return Err(SpectrumError::NonDivergentTable);
        }
        Ok(Self { kind: ModelKind::Table { m, n }, lambdas: values, m, n })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.lambdas[j]
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    /// Returns a copy truncated or extended to `modes` entries. Tables cannot
    /// be extended past their stored range.
    pub fn with_modes(&self, modes: usize) -> Result<Self, SpectrumError> {
        match self.kind {
            ModelKind::Table { .. } => {
                if modes > self.len() {
                    return Err(SpectrumError::LengthMismatch { expected: modes, got: self.len() });
                }
                Self::from_table(self.lambdas[..modes].to_vec(), self.m, self.n)
            }
            kind => Self::build(kind, modes),
        }
    }

    /// `λ_j` for any index, past the stored range for closed-form models.
    pub fn lambda_at(&self, j: usize) -> Option<f64> {
        if j < self.len() {
            return Some(self.lambdas[j]);
        }
        match self.kind {
            ModelKind::Table { .. } => None,
            kind => model_lambda(kind, j),
        }
    }

    /// Exact integer `λ_j` when the model is integer-valued.
    pub fn int_lambda_at(&self, j: usize) -> Option<BigInt> {
        match self.kind {
            ModelKind::Harmonic1d => Some(BigInt::from(2 * j as u64 + 1)),
            ModelKind::Harmonic1dPower { k } => Some(BigInt::from(2 * j as u64 + 1).pow(k)),
            ModelKind::HarmonicNd { n } => {
                let (q, _) = nd_shell(j as u64, n);
                Some(BigInt::from(2 * q + n as u64))
            }
            ModelKind::Table { .. } => {
                let x = *self.lambdas.get(j)?;
                (x.fract() == 0.0 && x.abs() < 9.0e15).then(|| BigInt::from(x as i64))
            }
        }
    }

    pub fn is_integer_valued(&self) -> bool {
        match self.kind {
            ModelKind::Table { .. } => self.lambdas.iter().all(|x| x.fract() == 0.0 && x.abs() < 9.0e15),
            _ => true,
        }
    }

    /// One period of `λ_j mod q` for the closed-form models (`None` for tables).
    pub fn residue_cycle(&self, q: u64) -> Option<Vec<u64>> {
        if q == 0 {
            return None;
        }
        let pow_mod = |b: u64, e: u32| {
            let mut acc = 1u128 % q as u128;
            for _ in 0..e {
                acc = acc * b as u128 % q as u128;
            }
            acc as u64
        };
        match self.kind {
            ModelKind::Harmonic1d => Some((0..q).map(|s| (2 * (s as u128) + 1).rem_euclid(q as u128) as u64).collect()),
            ModelKind::Harmonic1dPower { k } => Some((0..q).map(|s| pow_mod(((2 * s as u128 + 1) % q as u128) as u64, k)).collect()),
            ModelKind::HarmonicNd { n } => Some((0..q).map(|s| ((2 * s as u128 + n as u128) % q as u128) as u64).collect()),
            ModelKind::Table { .. } => None,
        }
    }

    /// Relative spread `(max - min) / max` of `|λ_j| / (j+1)^{m/2n}` over the
    /// top half of the stored range.
    pub fn weyl_spread(&self) -> f64 {
        let e = self.m as f64 / (2.0 * self.n as f64);
        let lo = self.len() / 2;
        let ratios: Vec<f64> = (lo..self.len()).map(|j| self.lambdas[j].abs() / ((j + 1) as f64).powf(e)).collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / max
    }

    /// Multi-index `α` attached to mode `j` of the `n`-dimensional oscillator,
    /// ordered by `|α|` then lexicographically.
    pub fn nd_multi_index(&self, j: usize) -> Option<Vec<u64>> {
        let ModelKind::HarmonicNd { n } = self.kind else { return None };
        let (q, mut pos) = nd_shell(j as u64, n);
        let mut alpha = Vec::with_capacity(n as usize);
        let mut rest = q;
        for d in (1..=n as u64).rev() {
            if d == 1 {
                alpha.push(rest);
                break;
            }
            for a in 0..=rest {
                let count = binomial(rest - a + d - 2, d - 2);
                if pos < count {
                    alpha.push(a);
                    rest -= a;
                    break;
                }
                pos -= count;
            }
        }
        Some(alpha)
    }

    /// Writes `j,lambda` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SpectrumError> {
        let err = |e: csv::Error| SpectrumError::Csv(e.to_string());
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "lambda"]).map_err(err)?;
        for (j, l) in self.lambdas.iter().enumerate() {
            wr.write_record([j.to_string(), fmt_float(*l)]).map_err(err)?;
        }
        wr.flush().map_err(|e| SpectrumError::Csv(e.to_string()))
    }

    /// Reads `j,lambda` rows into a table model of order `m` in dimension `n`.
    pub fn read_csv<R: Read>(r: R, m: u32, n: u32) -> Result<Self, SpectrumError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut values = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| SpectrumError::Csv(e.to_string()))?;
            if rec.len() != 2 {
                return Err(SpectrumError::Csv(format!("row {row}: expected 2 columns")));
            }
            let j: usize = rec[0].trim().parse().map_err(|_| SpectrumError::Csv(format!("row {row}: bad index")))?;
            if j != row {
                return Err(SpectrumError::Csv(format!("row {row}: index {j} out of order")));
            }
            values.push(rec[1].trim().parse().map_err(|_| SpectrumError::Csv(format!("row {row}: bad value")))?);
        }
        Self::from_table(values, m, n)
    }
}

fn model_lambda(kind: ModelKind, j: usize) -> Option<f64> {
    match kind {
        ModelKind::Harmonic1d => Some(2.0 * j as f64 + 1.0),
        ModelKind::Harmonic1dPower { k } => Some((2.0 * j as f64 + 1.0).powi(k as i32)),
        ModelKind::HarmonicNd { n } => Some((2 * nd_shell(j as u64, n).0 + n as u64) as f64),
        ModelKind::Table { .. } => None,
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Shell `q = |α|` containing index `j` and the offset of `j` inside it.
fn nd_shell(j: u64, n: u32) -> (u64, u64) {
    let n = n as u64;
    // number of multi-indices with |α| < q is C(q + n - 1, n)
    let below = |q: u64| binomial(q + n - 1, n);
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let mut q = ((j as f64 * fact).powf(1.0 / n as f64) as u64).saturating_sub(n);
    while q > 0 && below(q) > j {
        q -= 1;
    }
    while below(q + 1) <= j {
        q += 1;
    }
    (q, j - below(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_examples() {
        let h = EigenSequence::build(ModelKind::Harmonic1d, 6).unwrap();
        assert_eq!(h.lambdas(), &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
        assert_eq!((h.order(), h.dimension()), (2, 1));
        let p = EigenSequence::build(ModelKind::Harmonic1dPower { k: 2 }, 3).unwrap();
        assert_eq!(p.lambdas(), &[1.0, 9.0, 25.0]);
        assert_eq!(p.order(), 4);
    }

    #[test]
    fn nd_matches_enumeration() {
        let s = EigenSequence::build(ModelKind::HarmonicNd { n: 2 }, 6).unwrap();
        assert_eq!(s.lambdas(), &[2.0, 4.0, 4.0, 6.0, 6.0, 6.0]);
        for n in 1..=4u32 {
            let mut brute: Vec<u64> = Vec::new();
            let side = 12u64;
            let total = side.pow(n);
            for code in 0..total {
                let mut c = code;
                let mut sum = 0;
                for _ in 0..n {
                    sum += c % side;
                    c /= side;
                }
                if sum < side {
                    brute.push(2 * sum + n as u64);
                }
            }
            brute.sort_unstable();
            let modes = brute.iter().take_while(|&&v| v < 2 * (side - 1) + n as u64).count();
            let s = EigenSequence::build(ModelKind::HarmonicNd { n }, modes).unwrap();
            for j in 0..modes {
                assert_eq!(s.lambda(j), brute[j] as f64, "n={n} j={j}");
                assert_eq!(s.int_lambda_at(j).unwrap(), BigInt::from(brute[j]));
                assert_eq!(model_lambda(s.kind(), j).unwrap(), brute[j] as f64);
            }
        }
    }

    #[test]
    fn nd_multi_index_order() {
        let s = EigenSequence::build(ModelKind::HarmonicNd { n: 2 }, 10).unwrap();
        let got: Vec<Vec<u64>> = (0..6).map(|j| s.nd_multi_index(j).unwrap()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]);
        let t = EigenSequence::build(ModelKind::HarmonicNd { n: 3 }, 20).unwrap();
        for j in 0..20 {
            let a = t.nd_multi_index(j).unwrap();
            assert_eq!((2 * a.iter().sum::<u64>() + 3) as f64, t.lambda(j));
        }
    }

    #[test]
    fn table_validation() {
        assert_eq!(EigenSequence::from_table(vec![1.0, 3.0, 2.0], 2, 1).unwrap_err(), SpectrumError::UnsortedTable(2));
        assert_eq!(EigenSequence::from_table(vec![2.0, -2.0], 2, 1).unwrap_err(), SpectrumError::NonDivergentTable);
        let t = EigenSequence::from_table(vec![1.0, -2.0, 3.5], 2, 1).unwrap();
        assert_eq!(t.lambda_at(3), None);
        assert!(!t.is_integer_valued());
    }

    #[test]
    fn weyl_and_multiplicity() {
        let s = EigenSequence::build(ModelKind::HarmonicNd { n: 2 }, 4096).unwrap();
        assert!(s.weyl_spread() < 0.1);
        let mut counts = std::collections::BTreeMap::new();
        for &l in s.lambdas() {
            *counts.entry(l as u64).or_insert(0u64) += 1;
        }
        for q in 0..=20u64 {
            assert_eq!(counts[&(2 * q + 2)], q + 1);
        }
        for kind in [ModelKind::Harmonic1d, ModelKind::Harmonic1dPower { k: 3 }] {
            assert!(EigenSequence::build(kind, 1024).unwrap().weyl_spread() < 0.1);
        }
    }

    #[test]
    fn residue_cycles_match_brute_force() {
        for kind in [ModelKind::Harmonic1d, ModelKind::Harmonic1dPower { k: 3 }, ModelKind::HarmonicNd { n: 1 }] {
            let s = EigenSequence::build(kind, 200).unwrap();
            for q in 1..=13u64 {
                let cyc = s.residue_cycle(q).unwrap();
                for j in 0..200 {
                    let want = (s.int_lambda_at(j).unwrap() % BigInt::from(q)).to_string();
                    assert_eq!(cyc[j % q as usize].to_string(), want);
                }
            }
        }
    }

    #[test]
    fn csv_roundtrip() {
        let s = EigenSequence::build(ModelKind::Harmonic1dPower { k: 2 }, 5).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let t = EigenSequence::read_csv(buf.as_slice(), 4, 1).unwrap();
        assert_eq!(t.lambdas(), s.lambdas());
    }
}
