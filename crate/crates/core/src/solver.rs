//! Periodic solutions of the mode equations
//! `∂_t u_j + iλ_j c(t) u_j = f_j` on the circle.
//!
//! Each mode is solved through the variation-of-constants integrals
//!
//! ```text
//! backward: u(t) = (1 - e^{-2πiλc0})^{-1} ∫_0^{2π} exp(-iλ∫_{t-s}^t c) f(t-s) ds
//! forward:  u(t) = (e^{2πiλc0} - 1)^{-1}  ∫_0^{2π} exp( iλ∫_t^{t+s} c) f(t+s) ds
//! ```
//!
//! The backward form is used when `λ·Im c0 <= 0`, the forward form otherwise,
//! so that the prefactor never amplifies. Two evaluation paths exist:
//!
//! * **spectral**: writes `u = e^{-iλC̃} w` with `C̃` the periodic primitive
//!   of `c - c0`, which turns the `s`-integral into an exact division of
//!   Fourier coefficients; used when `λ·osc(Im C̃)` is moderate.
//! * **direct**: evaluates the integral on a refined grid with an
//!   endpoint-corrected trapezoid rule, summing in log space with the
//!   exponent clamped at ±700.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::SolverError;
use crate::io::fmt_float;
use crate::quadrature::GregoryRule;
use crate::spectrum::EigenSequence;
use crate::torus::{grid_point, wavenumber, MeanDecomposition, TorusFunction};

/// Divisors below this are treated as exact resonances.
pub const TOL_RES: f64 = 1e-8;
/// Divisors below this (and above [`TOL_RES`]) are flagged ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e-4;
/// Bound on the real part of any exponent evaluated by the direct path.
pub const EXP_CLAMP: f64 = 700.0;

const BLOCK: usize = 32;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Backward,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Auto,
    Spectral,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol_res: f64,
    pub ill_conditioned: f64,
    pub quadrature: Quadrature,
    /// Largest `λ·osc(Im C̃)` handled by the spectral path under `Auto`.
    pub spectral_range: f64,
    /// Target for `λ·max|c|·h` on the refined grid of the direct path.
    pub direct_step: f64,
    pub max_refine: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_res: TOL_RES,
            ill_conditioned: ILL_CONDITIONED,
            quadrature: Quadrature::Auto,
            spectral_range: 8.0,
            direct_step: 0.05,
            max_refine: 64,
        }
    }
}

/// A coefficient `c(t)` together with the data every mode solve reuses.
#[derive(Debug, Clone)]
pub struct Coefficient {
    c: TorusFunction,
    parts: MeanDecomposition,
    im_primitive_osc: f64,
    sup_abs: f64,
    b_min: f64,
    b_max: f64,
}

impl Coefficient {
    pub fn new(c: TorusFunction) -> Self {
        let parts = c.decompose_mean();
        let ims = parts.tilde_primitive.samples().iter().map(|z| z.im);
        let (lo, hi) = ims.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let sup_abs = c.sup_norm();
        let (b_min, b_max) = c.samples().iter().fold((f64::MAX, f64::MIN), |(lo, hi), z| (lo.min(z.im), hi.max(z.im)));
        Self { c, parts, im_primitive_osc: hi - lo, sup_abs, b_min, b_max }
    }

    pub fn function(&self) -> &TorusFunction {
        &self.c
    }

    pub fn parts(&self) -> &MeanDecomposition {
        &self.parts
    }

    pub fn c0(&self) -> Complex64 {
        self.parts.c0
    }

    pub fn grid_size(&self) -> usize {
        self.c.len()
    }

    /// Resamples onto another grid by trigonometric interpolation.
    pub fn resample(&self, n: usize) -> Result<Self, SolverError> {
        Ok(Self::new(self.c.resample(n)?))
    }
}

/// `|1 - e^{-2πiλc0}|`; for real `c0` computed as `2|sin(πλc0)|`.
pub fn small_divisor(lambda: f64, c0: Complex64) -> f64 {
    if c0.im == 0.0 {
        let x = lambda * c0.re;
        return 2.0 * (PI * (x - x.round())).sin().abs();
    }
    (Complex64::new(1.0, 0.0) - (-2.0 * PI * I * lambda * c0).exp()).norm()
}

pub fn select_formula(lambda: f64, b0: f64) -> Formula {
    if lambda * b0 <= 0.0 {
        Formula::Backward
    } else {
        Formula::Forward
    }
}

/// Prefactor divisor of the given formula: `|1 - e^{∓2πiλc0}|`.
pub fn formula_divisor(formula: Formula, lambda: f64, c0: Complex64) -> f64 {
    match formula {
        Formula::Backward => small_divisor(lambda, c0),
        Formula::Forward => small_divisor(-lambda, c0),
    }
}

/// Logarithm of the formula prefactor, computed without overflow.
fn log_prefactor(formula: Formula, lambda: f64, c0: Complex64) -> Complex64 {
    // backward: 1/(1 - e^x) with x = -2πiλc0; forward: 1/(e^y - 1) with y = 2πiλc0
    let one = Complex64::new(1.0, 0.0);
    let ln_one_minus_exp = |x: Complex64| -> Complex64 {
        if x.re <= 0.0 {
            -(one - x.exp()).ln()
        } else {
            -x + I * PI - (one - (-x).exp()).ln()
        }
    };
    match formula {
        Formula::Backward => ln_one_minus_exp(-2.0 * PI * I * lambda * c0),
        Formula::Forward => I * PI + ln_one_minus_exp(2.0 * PI * I * lambda * c0),
    }
}

/// One solved mode.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub u: TorusFunction,
    pub formula: Formula,
    pub path: Quadrature,
    pub divisor: f64,
    pub ill_conditioned: bool,
    pub clamped: bool,
    pub refine: usize,
    pub residual: f64,
    pub residual_bound: f64,
}

impl ModeSolution {
    pub fn residual_ok(&self) -> bool {
        self.residual <= self.residual_bound
    }
}

/// `∂_t u + iλ c u`.
pub fn apply_mode(lambda: f64, c: &TorusFunction, u: &TorusFunction) -> Result<TorusFunction, SolverError> {
    let cu = c.mul(u)?;
    Ok(u.derivative().zip_with(&cu, |du, cu| du + I * lambda * cu)?)
}

pub fn solve_mode(
    lambda: f64,
    coef: &Coefficient,
    f: &TorusFunction,
    opts: &SolveOptions,
) -> Result<ModeSolution, SolverError> {
    if f.len() != coef.grid_size() {
        return Err(crate::error::TorusError::GridMismatch { left: coef.grid_size(), right: f.len() }.into());
    }
    let c0 = coef.c0();
    let formula = select_formula(lambda, c0.im);
    let divisor = formula_divisor(formula, lambda, c0);
    if !(divisor >= opts.tol_res) {
        return Err(SolverError::ResonantMode { lambda, divisor });
    }
    let path = match opts.quadrature {
        Quadrature::Auto if lambda.abs() * coef.im_primitive_osc <= opts.spectral_range => Quadrature::Spectral,
        Quadrature::Auto => Quadrature::Direct,
        other => other,
    };
    let (u, clamped, refine) = match path {
        Quadrature::Spectral => (solve_spectral(lambda, coef, f)?, false, 1),
        _ => {
            let refine = refine_factor(lambda, coef, opts);
            let (u, clamped) = solve_direct(lambda, coef, f, formula, refine, true)?;
            (u, clamped, refine)
        }
    };
    let residual = apply_mode(lambda, coef.function(), &u)?.sub(f)?.sup_norm();
    let residual_bound = 1e-8 * (1.0 + f.sup_norm() / divisor);
    Ok(ModeSolution {
        u,
        formula,
        path,
        divisor,
        ill_conditioned: divisor < opts.ill_conditioned,
        clamped,
        refine,
        residual,
        residual_bound,
    })
}

fn refine_factor(lambda: f64, coef: &Coefficient, opts: &SolveOptions) -> usize {
    let h = 2.0 * PI / coef.grid_size() as f64;
    let want = (lambda.abs() * coef.sup_abs * h / opts.direct_step).ceil().max(1.0) as usize;
    want.next_power_of_two().min(opts.max_refine.max(1))
}

fn solve_spectral(lambda: f64, coef: &Coefficient, f: &TorusFunction) -> Result<TorusFunction, SolverError> {
    let n = f.len();
    let c0 = coef.c0();
    let prim = coef.parts().tilde_primitive.samples();
    let g = TorusFunction::from_samples(
        prim.iter().zip(f.samples()).map(|(&p, &fv)| (I * lambda * p).exp() * fv).collect(),
    )?;
    let gc = g.coeffs();
    let mut wc = vec![Complex64::new(0.0, 0.0); n];
    let shift = lambda * c0;
    for (i, (w, &gv)) in wc.iter_mut().zip(gc).enumerate() {
        if i == n / 2 {
            let k = (n / 2) as f64;
            *w = gv * 0.5 * (1.0 / (I * (k + shift)) + 1.0 / (I * (shift - k)));
        } else {
            *w = gv / (I * (wavenumber(i, n) as f64 + shift));
        }
    }
    let w = TorusFunction::from_coeffs(wc)?;
    Ok(TorusFunction::from_samples(
        prim.iter().zip(w.samples()).map(|(&p, &wv)| (-I * lambda * p).exp() * wv).collect(),
    )?)
}

/// Direct quadrature of the chosen formula on an `refine·N` grid. Returns the
/// solution and whether the exponent clamp engaged.
fn solve_direct(
    lambda: f64,
    coef: &Coefficient,
    f: &TorusFunction,
    formula: Formula,
    refine: usize,
    allow_truncation: bool,
) -> Result<(TorusFunction, bool), SolverError> {
    let n = f.len();
    let m = n * refine;
    let h = 2.0 * PI / m as f64;
    let c0 = coef.c0();
    let prim = coef.parts().tilde_primitive.resample(m)?;
    let prim = prim.samples();
    let ff = f.resample(m)?;
    let ff = ff.samples();
    let logp = log_prefactor(formula, lambda, c0);
    let rule = GregoryRule::new(8.min(m / 2));
    // the real part of the exponent is nonincreasing in s when λ·b keeps the
    // sign that makes the chosen formula decay
    let monotone = allow_truncation
        && match formula {
            Formula::Backward => (lambda * coef.b_min).max(lambda * coef.b_max) <= 0.0,
            Formula::Forward => (lambda * coef.b_min).min(lambda * coef.b_max) >= 0.0,
        };
    // exp(E_k) / exp(E_{k-1}) depends only on the fine-grid index of node k
    let step: Vec<Complex64> = (0..m)
        .map(|j| match formula {
            Formula::Backward => (-I * lambda * (c0 * h - prim[j] + prim[(j + 1) % m])).exp(),
            Formula::Forward => (I * lambda * (c0 * h + prim[j] - prim[(j + m - 1) % m])).exp(),
        })
        .collect();
    let mut clamped = false;
    let samples: Vec<Complex64> = (0..n)
        .map(|i| {
            let ti = i * refine;
            let base = prim[ti];
            let exponent = |k: usize, idx: usize| -> Complex64 {
                let s = k as f64 * h;
                logp + match formula {
                    Formula::Backward => -I * lambda * (c0 * s + base - prim[idx]),
                    Formula::Forward => I * lambda * (c0 * s + prim[idx] - base),
                }
            };
            let mut acc = Complex64::new(0.0, 0.0);
            let mut first = 0.0;
            let mut z = Complex64::new(0.0, 0.0);
            let mut exact = false;
            for k in 0..=m {
                let idx = match formula {
                    Formula::Backward => (ti + m - k % m) % m,
                    Formula::Forward => (ti + k) % m,
                };
                if k % BLOCK == 0 {
                    let e = exponent(k, idx);
                    if k == 0 {
                        first = e.re;
                    }
                    if monotone && e.re < first - 40.0 {
                        break;
                    }
                    exact = e.re.abs() > EXP_CLAMP - 50.0;
                    z = e.exp();
                } else if !exact {
                    z *= step[idx];
                }
                if exact {
                    let mut e = exponent(k, idx);
                    if e.re > EXP_CLAMP {
                        e.re = EXP_CLAMP;
                        clamped = true;
                    } else if e.re < -EXP_CLAMP {
                        continue;
                    }
                    z = e.exp();
                }
                acc += z * ff[idx] * rule.weight(k, m);
            }
            acc * h
        })
        .collect();
    Ok((TorusFunction::from_samples(samples)?, clamped))
}

/// Sup-norm difference between the backward and forward formulas, both
/// evaluated by direct quadrature. Fails when either needs the clamp.
pub fn equivalence_check(
    lambda: f64,
    coef: &Coefficient,
    f: &TorusFunction,
    opts: &SolveOptions,
) -> Result<f64, SolverError> {
    let c0 = coef.c0();
    for formula in [Formula::Backward, Formula::Forward] {
        let d = formula_divisor(formula, lambda, c0);
        if !(d >= opts.tol_res) {
            return Err(SolverError::ResonantMode { lambda, divisor: d });
        }
    }
    let refine = refine_factor(lambda, coef, opts);
    let (u1, k1) = solve_direct(lambda, coef, f, Formula::Backward, refine, false)?;
    let (u2, k2) = solve_direct(lambda, coef, f, Formula::Forward, refine, false)?;
    if k1 || k2 {
        return Err(SolverError::ExponentClamped { lambda });
    }
    Ok(u1.sub(&u2)?.sup_norm())
}

/// A family `(u_j)` of periodic functions indexed by the modes of a spectrum.
/// Entries may be undefined (resonant modes).
#[derive(Debug, Clone)]
pub struct ModeField {
    grid: usize,
    eigs: Arc<EigenSequence>,
    entries: Vec<Option<TorusFunction>>,
}

impl ModeField {
    pub fn new(eigs: Arc<EigenSequence>, entries: Vec<TorusFunction>) -> Result<Self, SolverError> {
        Self::from_entries(eigs, entries.into_iter().map(Some).collect())
    }

    pub fn from_entries(eigs: Arc<EigenSequence>, entries: Vec<Option<TorusFunction>>) -> Result<Self, SolverError> {
        if entries.is_empty() {
            return Err(SolverError::EmptyField);
        }
        if entries.len() > eigs.len() {
            return Err(SolverError::SpectrumTooShort { modes: entries.len(), available: eigs.len() });
        }
        let grid = entries.iter().flatten().map(|e| e.len()).next().unwrap_or(4);
        for e in entries.iter().flatten() {
            if e.len() != grid {
                return Err(crate::error::TorusError::GridMismatch { left: grid, right: e.len() }.into());
            }
        }
        Ok(Self { grid, eigs, entries })
    }

    /// Field whose mode `j` is `f(j, λ_j, t)`.
    pub fn from_fn(
        eigs: Arc<EigenSequence>,
        modes: usize,
        n: usize,
        f: impl Fn(usize, f64, f64) -> Complex64,
    ) -> Result<Self, SolverError> {
        let entries = (0..modes)
            .map(|j| TorusFunction::from_fn(n, |t| f(j, eigs.lambda(j), t)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(eigs, entries)
    }

    pub fn zeros(eigs: Arc<EigenSequence>, modes: usize, n: usize) -> Result<Self, SolverError> {
        Self::from_fn(eigs, modes, n, |_, _, _| Complex64::new(0.0, 0.0))
    }

    pub fn modes(&self) -> usize {
        self.entries.len()
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn eigs(&self) -> &Arc<EigenSequence> {
        &self.eigs
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.eigs.lambda(j)
    }

    pub fn get(&self, j: usize) -> Option<&TorusFunction> {
        self.entries.get(j).and_then(|e| e.as_ref())
    }

    pub fn entries(&self) -> &[Option<TorusFunction>] {
        &self.entries
    }

    /// `sup_t |u_j|` per mode, `None` for undefined entries.
    pub fn sup_norms(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.as_ref().map(|u| u.sup_norm())).collect()
    }

    /// Writes `j,i,t,re,im` rows for every defined mode.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SolverError> {
        let err = |e: csv::Error| SolverError::Csv(e.to_string());
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "i", "t", "re", "im"]).map_err(err)?;
        for (j, e) in self.entries.iter().enumerate() {
            let Some(u) = e else { continue };
            for (i, z) in u.samples().iter().enumerate() {
                wr.write_record([
                    j.to_string(),
                    i.to_string(),
                    fmt_float(grid_point(i, self.grid)),
                    fmt_float(z.re),
                    fmt_float(z.im),
                ])
                .map_err(err)?;
            }
        }
        wr.flush().map_err(|e| SolverError::Csv(e.to_string()))
    }

    /// Reads the format written by [`ModeField::write_csv`]; modes absent from
    /// the file become undefined entries.
    pub fn read_csv<R: Read>(r: R, eigs: Arc<EigenSequence>) -> Result<Self, SolverError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows: Vec<(usize, usize, Complex64)> = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| SolverError::Csv(e.to_string()))?;
            if rec.len() != 5 {
                return Err(SolverError::Csv(format!("row {line}: expected 5 columns")));
            }
            let bad = |what: &str| SolverError::Csv(format!("row {line}: bad {what}"));
            let j = rec[0].trim().parse().map_err(|_| bad("j"))?;
            let i = rec[1].trim().parse().map_err(|_| bad("i"))?;
            let re = rec[3].trim().parse().map_err(|_| bad("re"))?;
            let im = rec[4].trim().parse().map_err(|_| bad("im"))?;
            rows.push((j, i, Complex64::new(re, im)));
        }
        let Some(max_j) = rows.iter().map(|r| r.0).max() else { return Err(SolverError::EmptyField) };
        let n = rows.iter().map(|r| r.1).max().unwrap_or(0) + 1;
        let mut data: Vec<Option<Vec<Complex64>>> = vec![None; max_j + 1];
        for (j, i, z) in rows {
            data[j].get_or_insert_with(|| vec![Complex64::new(f64::NAN, 0.0); n])[i] = z;
        }
        let mut entries = Vec::with_capacity(data.len());
        for (j, d) in data.into_iter().enumerate() {
            match d {
                Some(v) if v.iter().any(|z| z.re.is_nan()) => {
                    return Err(SolverError::Csv(format!("mode {j} is missing samples")))
                }
                Some(v) => entries.push(Some(TorusFunction::from_samples(v)?)),
                None => entries.push(None),
            }
        }
        Self::from_entries(eigs, entries)
    }
}

/// Per-mode divisor information from [`solve_field`].
#[derive(Debug, Clone, Serialize)]
pub struct DivisorRow {
    pub j: usize,
    pub lambda: f64,
    pub formula: Formula,
    pub divisor: f64,
    pub resonant: bool,
    pub ill_conditioned: bool,
    pub clamped: bool,
    pub residual: Option<f64>,
    pub residual_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivisorReport {
    pub rows: Vec<DivisorRow>,
}

impl DivisorReport {
    pub fn resonant_indices(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| r.resonant).map(|r| r.j).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn residuals_ok(&self) -> bool {
        self.rows.iter().all(|r| match (r.residual, r.residual_bound) {
            (Some(res), Some(b)) => res <= b,
            _ => true,
        })
    }

    /// Writes `j,lambda,divisor,resonant` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SolverError> {
        let err = |e: csv::Error| SolverError::Csv(e.to_string());
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "lambda", "divisor", "resonant"]).map_err(err)?;
        for r in &self.rows {
            wr.write_record([r.j.to_string(), fmt_float(r.lambda), fmt_float(r.divisor), r.resonant.to_string()])
                .map_err(err)?;
        }
        wr.flush().map_err(|e| SolverError::Csv(e.to_string()))
    }
}

fn divisor_row(j: usize, lambda: f64, c0: Complex64, opts: &SolveOptions) -> DivisorRow {
    let formula = select_formula(lambda, c0.im);
    let divisor = formula_divisor(formula, lambda, c0);
    DivisorRow {
        j,
        lambda,
        formula,
        divisor,
        resonant: !(divisor >= opts.tol_res),
        ill_conditioned: divisor < opts.ill_conditioned,
        clamped: false,
        residual: None,
        residual_bound: None,
    }
}

/// Divisors of the first `modes` eigenvalues for the mean `c0`, without solving.
pub fn divisor_report(c0: Complex64, eigs: &EigenSequence, modes: usize, opts: &SolveOptions) -> DivisorReport {
    let rows = eigs.lambdas().iter().take(modes).enumerate().map(|(j, &l)| divisor_row(j, l, c0, opts)).collect();
    DivisorReport { rows }
}

/// Solves every mode of `f`. Resonant modes are left undefined and reported;
/// the call fails only when no mode can be solved.
pub fn solve_field(
    c: &TorusFunction,
    f: &ModeField,
    opts: &SolveOptions,
) -> Result<(ModeField, DivisorReport), SolverError> {
    let coef = Coefficient::new(c.clone());
    let coef = if coef.grid_size() == f.grid_size() { coef } else { coef.resample(f.grid_size())? };
    let results: Vec<(Option<TorusFunction>, DivisorRow)> = (0..f.modes())
        .into_par_iter()
        .map(|j| {
            let lambda = f.lambda(j);
            let mut row = divisor_row(j, lambda, coef.c0(), opts);
            let Some(fj) = f.get(j) else { return Ok((None, row)) };
            match solve_mode(lambda, &coef, fj, opts) {
                Ok(sol) => {
                    row.clamped = sol.clamped;
                    row.residual = Some(sol.residual);
                    row.residual_bound = Some(sol.residual_bound);
                    Ok((Some(sol.u), row))
                }
                Err(SolverError::ResonantMode { .. }) => Ok((None, row)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, SolverError>>()?;
    if results.iter().all(|(u, _)| u.is_none()) {
        return Err(SolverError::AllResonant);
    }
    let (entries, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((ModeField::from_entries(f.eigs().clone(), entries)?, DivisorReport { rows }))
}

/// `(∂_t + iλ_j c) u_j` for every defined mode.
pub fn apply_operator(c: &TorusFunction, u: &ModeField) -> Result<ModeField, SolverError> {
    let c = if c.len() == u.grid_size() { c.clone() } else { c.resample(u.grid_size())? };
    let entries = (0..u.modes())
        .into_par_iter()
        .map(|j| u.get(j).map(|uj| apply_mode(u.lambda(j), &c, uj)).transpose())
        .collect::<Result<Vec<_>, _>>()?;
    ModeField::from_entries(u.eigs().clone(), entries)
}
