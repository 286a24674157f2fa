//! Periodic functions on the circle `T = R / 2πZ`, stored as samples on a
//! uniform grid with lazily computed trigonometric coefficients.
//!
//! Coefficients are normalized so that `f(t) = Σ ĉ_k e^{ikt}`; the Nyquist
//! coefficient is split evenly between `k = ±N/2`, so it contributes
//! `ĉ_{N/2} cos(Nt/2)` off the grid and is dropped by differentiation.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::TorusError;
use crate::io::fmt_float;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let scale = 1.0 / n as f64;
    for z in &mut buf {
        *z *= scale;
    }
    buf
}

pub(crate) fn fft_inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf
}

/// Signed wavenumber of FFT slot `i` on an `n`-point grid. The Nyquist slot
/// maps to `+n/2`.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn check_grid(n: usize) -> Result<(), TorusError> {
    if n >= 4 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(TorusError::BadGridSize(n))
    }
}

/// A 2π-periodic complex function sampled at `t_i = 2πi/N`.
#[derive(Debug, Clone)]
pub struct TorusFunction {
    samples: Vec<Complex64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl TorusFunction {
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self, TorusError> {
        check_grid(samples.len())?;
        Ok(Self { samples, coeffs: OnceLock::new() })
    }

    pub fn from_real_samples(samples: &[f64]) -> Result<Self, TorusError> {
        Self::from_samples(samples.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Builds a function from coefficients in FFT order (length `N`).
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self, TorusError> {
        check_grid(coeffs.len())?;
        let samples = fft_inverse(&coeffs);
        let lock = OnceLock::new();
        let _ = lock.set(coeffs);
        Ok(Self { samples, coeffs: lock })
    }

    /// Builds a trigonometric polynomial from `(k, ĉ_k)` pairs. Frequencies with
    /// `|k| >= N/2` are rejected.
    pub fn from_trig(n: usize, terms: &[(i64, Complex64)]) -> Result<Self, TorusError> {
        check_grid(n)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        let half = (n / 2) as i64;
        for &(k, c) in terms {
            if k.abs() >= half {
                return Err(TorusError::BadGridSize(n));
            }
            let slot = if k >= 0 { k as usize } else { (k + n as i64) as usize };
            coeffs[slot] += c;
        }
        Self::from_coeffs(coeffs)
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self, TorusError> {
        check_grid(n)?;
        Ok(Self { samples: (0..n).map(|i| f(grid_point(i, n))).collect(), coeffs: OnceLock::new() })
    }

    pub fn constant(n: usize, value: Complex64) -> Result<Self, TorusError> {
        Self::from_samples(vec![value; n])
    }

    pub fn zeros(n: usize) -> Result<Self, TorusError> {
        Self::constant(n, Complex64::new(0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| grid_point(i, self.len())).collect()
    }

    /// Trigonometric coefficients in FFT order.
    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| fft_forward(&self.samples))
    }

    /// Coefficient `ĉ_k`; `k = ±N/2` each carry half of the Nyquist slot.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.len() as i64;
        let half = n / 2;
        if k.abs() > half {
            return Complex64::new(0.0, 0.0);
        }
        let c = self.coeffs();
        if k.abs() == half {
            return c[half as usize] * 0.5;
        }
        c[k.rem_euclid(n) as usize]
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs()[0]
    }

    /// Trapezoid rule over one period, `∫_0^{2π} f`.
    pub fn integral(&self) -> Complex64 {
        let sum: Complex64 = self.samples.iter().sum();
        sum * (2.0 * PI / self.len() as f64)
    }

    pub fn derivative(&self) -> Self {
        self.derivative_n(1)
    }

    pub fn derivative_n(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let n = self.len();
        let mut c = self.coeffs().to_vec();
        for (i, z) in c.iter_mut().enumerate() {
            if i == n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, wavenumber(i, n) as f64).powu(order);
            }
        }
        Self::from_coeffs(c).expect("grid size preserved")
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn eval(&self, t: f64) -> Complex64 {
        let n = self.len();
        let c = self.coeffs();
        let mut acc = c[n / 2] * (t * (n / 2) as f64).cos();
        for (i, &z) in c.iter().enumerate() {
            if i != n / 2 {
                acc += z * Complex64::from_polar(1.0, wavenumber(i, n) as f64 * t);
            }
        }
        acc
    }

    /// Trigonometric interpolation onto an `m`-point grid.
    pub fn resample(&self, m: usize) -> Result<Self, TorusError> {
        check_grid(m)?;
        let n = self.len();
        if m == n {
            return Ok(self.clone());
        }
        let c = self.coeffs();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        if m > n {
            for (i, &z) in c.iter().enumerate() {
                if i == n / 2 {
                    out[n / 2] += z * 0.5;
                    out[m - n / 2] += z * 0.5;
                } else {
                    out[wavenumber(i, n).rem_euclid(m as i64) as usize] += z;
                }
            }
        } else {
            for (i, &z) in c.iter().enumerate() {
                let k = wavenumber(i, n);
                if i == n / 2 {
                    continue;
                }
                if k.abs() < (m / 2) as i64 {
                    out[k.rem_euclid(m as i64) as usize] += z;
                } else if k.abs() == (m / 2) as i64 {
                    out[m / 2] += z;
                }
            }
        }
        Self::from_coeffs(out)
    }

    /// Largest sample modulus.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Grid sup-norm, replaced by the value on the doubled grid when the two
    /// differ by more than one percent.
    pub fn sup_norm_refined(&self) -> f64 {
        let coarse = self.sup_norm();
        let fine = self.resample(2 * self.len()).map(|f| f.sup_norm()).unwrap_or(coarse);
        if (fine - coarse).abs() > 0.01 * fine.max(coarse) {
            fine.max(coarse)
        } else {
            coarse
        }
    }

    pub fn decompose_mean(&self) -> MeanDecomposition {
        let n = self.len();
        let c0 = self.mean();
        let tilde = self.map(|z| z - c0);
        let src = self.coeffs();
        let mut p = vec![Complex64::new(0.0, 0.0); n];
        let mut at_zero = Complex64::new(0.0, 0.0);
        for i in 1..n {
            if i == n / 2 {
                continue;
            }
            p[i] = src[i] / Complex64::new(0.0, wavenumber(i, n) as f64);
            at_zero += p[i];
        }
        p[0] = -at_zero;
        let tilde_primitive = Self::from_coeffs(p).expect("grid size preserved");
        MeanDecomposition { c0, a0: c0.re, b0: c0.im, tilde, tilde_primitive }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { samples: self.samples.iter().map(|&z| f(z)).collect(), coeffs: OnceLock::new() }
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, TorusError> {
        if self.len() != other.len() {
            return Err(TorusError::GridMismatch { left: self.len(), right: other.len() });
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { samples, coeffs: OnceLock::new() })
    }

    pub fn add(&self, other: &Self) -> Result<Self, TorusError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TorusError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, TorusError> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn re(&self) -> Self {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    pub fn im(&self) -> Self {
        self.map(|z| Complex64::new(z.im, 0.0))
    }

    /// Largest `|Im|` over the samples.
    pub fn max_imag(&self) -> f64 {
        self.samples.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Writes `t,re,im` rows.
    pub fn write_samples_csv<W: Write>(&self, w: W) -> Result<(), TorusError> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| TorusError::Csv(e.to_string());
        wr.write_record(["t", "re", "im"]).map_err(err)?;
        for (i, z) in self.samples.iter().enumerate() {
            let t = grid_point(i, self.len());
            wr.write_record([fmt_float(t), fmt_float(z.re), fmt_float(z.im)]).map_err(err)?;
        }
        wr.flush().map_err(|e| TorusError::Csv(e.to_string()))
    }

    pub fn read_samples_csv<R: Read>(r: R) -> Result<Self, TorusError> {
        let rows = read_triples(r)?;
        Self::from_samples(rows.into_iter().map(|(_, re, im)| Complex64::new(re, im)).collect())
    }

    /// Writes `k,re,im` rows for `k = -N/2..=N/2`.
    pub fn write_coeffs_csv<W: Write>(&self, w: W) -> Result<(), TorusError> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| TorusError::Csv(e.to_string());
        wr.write_record(["k", "re", "im"]).map_err(err)?;
        let half = (self.len() / 2) as i64;
        for k in -half..=half {
            let z = self.coeff(k);
            wr.write_record([k.to_string(), fmt_float(z.re), fmt_float(z.im)]).map_err(err)?;
        }
        wr.flush().map_err(|e| TorusError::Csv(e.to_string()))
    }

    pub fn read_coeffs_csv<R: Read>(r: R) -> Result<Self, TorusError> {
        let rows = read_triples(r)?;
        if rows.len() < 5 {
            return Err(TorusError::Csv("too few coefficient rows".into()));
        }
        let n = rows.len() - 1;
        check_grid(n)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (k, re, im) in rows {
            let k = k.round() as i64;
            if k.unsigned_abs() as usize > n / 2 {
                return Err(TorusError::Csv(format!("wavenumber {k} out of range")));
            }
            coeffs[k.rem_euclid(n as i64) as usize] += Complex64::new(re, im);
        }
        Self::from_coeffs(coeffs)
    }
}

/// `t_i = 2πi/N`.
pub fn grid_point(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

fn read_triples<R: Read>(r: R) -> Result<Vec<(f64, f64, f64)>, TorusError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| TorusError::Csv(e.to_string()))?;
        if rec.len() != 3 {
            return Err(TorusError::Csv(format!("expected 3 columns, got {}", rec.len())));
        }
        let p = |s: &str| s.trim().parse::<f64>().map_err(|e| TorusError::Csv(e.to_string()));
        out.push((p(&rec[0])?, p(&rec[1])?, p(&rec[2])?));
    }
    Ok(out)
}

/// Mean/fluctuation split `f = c0 + f̃` together with the periodic primitive
/// of `f̃` normalized to vanish at `t = 0`.
#[derive(Debug, Clone)]
pub struct MeanDecomposition {
    pub c0: Complex64,
    pub a0: f64,
    pub b0: f64,
    pub tilde: TorusFunction,
    pub tilde_primitive: TorusFunction,
}

impl MeanDecomposition {
    /// `∫_{t0}^{t1} f(r) dr`, evaluated through the trigonometric interpolant.
    pub fn integral(&self, t0: f64, t1: f64) -> Complex64 {
        self.c0 * (t1 - t0) + self.tilde_primitive.eval(t1) - self.tilde_primitive.eval(t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mean_examples() {
        let f = TorusFunction::from_fn(64, |t| c(3.0 + t.sin(), 0.0)).unwrap();
        assert_abs_diff_eq!(f.mean().re, 3.0, epsilon = 1e-14);
        let g = TorusFunction::from_fn(64, |t| c(t.cos(), 0.0)).unwrap();
        assert_abs_diff_eq!(g.mean().norm(), 0.0, epsilon = 1e-15);
        let h = TorusFunction::constant(16, c(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(h.mean().re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let f = TorusFunction::from_fn(64, |t| c(t.sin(), 0.0)).unwrap();
        let d = f.derivative();
        for (t, z) in d.grid().iter().zip(d.samples()) {
            assert_abs_diff_eq!(z.re, t.cos(), epsilon = 1e-13);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-13);
        }
        let k = TorusFunction::constant(32, c(5.0, 0.0)).unwrap().derivative();
        assert!(k.sup_norm() < 1e-13);
        let e = TorusFunction::from_fn(32, |t| Complex64::from_polar(1.0, 3.0 * t)).unwrap();
        let de = e.derivative();
        for (i, z) in de.samples().iter().enumerate() {
            let want = c(0.0, 3.0) * e.samples()[i];
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn primitive_of_cosine_is_sine() {
        let f = TorusFunction::from_fn(64, |t| c(t.cos(), 0.0)).unwrap();
        let d = f.decompose_mean();
        assert!(d.c0.norm() < 1e-15);
        for (t, z) in d.tilde_primitive.grid().iter().zip(d.tilde_primitive.samples()) {
            assert_abs_diff_eq!(z.re, t.sin(), epsilon = 1e-13);
        }
        assert!(d.tilde_primitive.samples()[0].norm() < 1e-15);
    }

    #[test]
    fn integral_identity() {
        let f = TorusFunction::from_fn(128, |t| c(0.3 + (2.0 * t).cos(), t.sin())).unwrap();
        let d = f.decompose_mean();
        let (t, s): (f64, f64) = (1.1, 2.5);
        let exact = c(0.3 * s + ((2.0 * t).sin() - (2.0 * (t - s)).sin()) / 2.0, -(t.cos() - (t - s).cos()));
        assert!((d.integral(t - s, t) - exact).norm() < 1e-13);
    }

    #[test]
    fn resample_and_eval_agree() {
        let f = TorusFunction::from_fn(32, |t| c((3.0 * t).cos(), (5.0 * t).sin())).unwrap();
        let g = f.resample(128).unwrap();
        for (t, z) in g.grid().iter().zip(g.samples()) {
            assert!((f.eval(*t) - z).norm() < 1e-13);
        }
        let back = g.resample(32).unwrap();
        for (a, b) in back.samples().iter().zip(f.samples()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_grid() {
        assert_eq!(TorusFunction::zeros(12).unwrap_err(), TorusError::BadGridSize(12));
    }

    #[test]
    fn csv_roundtrip() {
        let f = TorusFunction::from_fn(16, |t| c(t.cos(), 0.25 * t.sin())).unwrap();
        let mut buf = Vec::new();
        f.write_samples_csv(&mut buf).unwrap();
        let g = TorusFunction::read_samples_csv(buf.as_slice()).unwrap();
        assert_eq!(f.samples(), g.samples());
        let mut cbuf = Vec::new();
        f.write_coeffs_csv(&mut cbuf).unwrap();
        let h = TorusFunction::read_coeffs_csv(cbuf.as_slice()).unwrap();
        for (a, b) in h.samples().iter().zip(f.samples()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
