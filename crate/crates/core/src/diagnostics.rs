//! Finite-data diagnostics for time-periodic Gelfand-Shilov regularity.
//!
//! All fits are ordinary least squares on logarithms over explicit windows.
//! Quantities below [`FLOOR`] are excluded before taking logs.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::DiagnosticsError;
use crate::io::fmt_float;
use crate::regression::{least_squares, ols};
use crate::solver::ModeField;
use crate::spectrum::HermiteBasis;

pub const FLOOR: f64 = 1e-300;
/// Fits with `r2` below this value are reported but make no claim.
pub const R2_CLAIM: f64 = 0.9;
pub const MIN_MODES: usize = 32;

/// Gevrey order `σ` in `t`, Gelfand-Shilov order `μ`, dimension `n` and
/// operator order `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GSParams {
    pub mu: f64,
    pub sigma: f64,
    pub n: u32,
    pub m: u32,
}

impl GSParams {
    pub fn new(mu: f64, sigma: f64, n: u32, m: u32) -> Result<Self, DiagnosticsError> {
        if !(mu >= 0.5) || !mu.is_finite() {
            return Err(DiagnosticsError::InvalidParams(format!("mu = {mu} must be >= 1/2")));
        }
        if !(sigma > 1.0) || !sigma.is_finite() {
            return Err(DiagnosticsError::InvalidParams(format!("sigma = {sigma} must be > 1")));
        }
        if n == 0 || m == 0 {
            return Err(DiagnosticsError::InvalidParams("n and m must be positive".into()));
        }
        Ok(Self { mu, sigma, n, m })
    }

    /// `e = 1/(2nμ)`.
    pub fn exponent(&self) -> f64 {
        1.0 / (2.0 * self.n as f64 * self.mu)
    }
}

/// Result of [`fit_decay`]. `epsilon` is `None` for fields with at most two
/// nonzero modes (finite support, nothing to fit).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub epsilon: Option<f64>,
    /// Prefactor `C` in `sup|u_j| ≈ C exp(-ε (j+1)^e)`.
    pub c: Option<f64>,
    pub r2: Option<f64>,
    /// `r2 >= 0.9`.
    pub claim: bool,
    /// A power law `(j+1)^{-p}` fits at least as well as the exponential.
    pub sub_exponential: bool,
    pub sigma_fit: Option<f64>,
    /// `max_j sup_t |∂_t^k u_j|` for `k = 0..=k_max`.
    pub derivative_sups: Vec<f64>,
    pub window: (usize, usize),
    pub nonzero_modes: usize,
    pub trivial: bool,
}

pub fn fit_decay(field: &ModeField, params: &GSParams, k_max: u32) -> Result<DecayFit, DiagnosticsError> {
    let sups: Vec<Option<f64>> = field.sup_norms();
    let nonzero: Vec<(usize, f64)> =
        sups.iter().enumerate().filter_map(|(j, s)| s.filter(|v| *v > FLOOR).map(|v| (j, v))).collect();
    if nonzero.is_empty() {
        return Err(DiagnosticsError::DegenerateData);
    }
    let derivative_sups: Vec<f64> = (0..=k_max)
        .map(|k| {
            field
                .entries()
                .iter()
                .flatten()
                .map(|u| if k == 0 { u.sup_norm() } else { u.derivative_n(k).sup_norm() })
                .fold(0.0, f64::max)
        })
        .collect();
    let window = (nonzero[0].0, nonzero[nonzero.len() - 1].0);
    if nonzero.len() <= 2 {
        return Ok(DecayFit {
            epsilon: None,
            c: None,
            r2: None,
            claim: false,
            sub_exponential: false,
            sigma_fit: None,
            derivative_sups,
            window,
            nonzero_modes: nonzero.len(),
            trivial: true,
        });
    }
    if field.modes() < MIN_MODES {
        return Err(DiagnosticsError::TooFewModes { needed: MIN_MODES, got: field.modes() });
    }
    let e = params.exponent();
    let xs: Vec<f64> = nonzero.iter().map(|(j, _)| ((j + 1) as f64).powf(e)).collect();
    let logs: Vec<f64> = nonzero.iter().map(|(j, _)| ((j + 1) as f64).ln()).collect();
    let ys: Vec<f64> = nonzero.iter().map(|(_, v)| -v.ln()).collect();
    let fit = ols(&xs, &ys).ok_or_else(|| DiagnosticsError::FitUnavailable("degenerate regressors".into()))?;
    let power = ols(&logs, &ys);
    let sub_exponential = fit.slope <= 0.0 || power.is_some_and(|p| p.slope > 0.0 && p.r2 >= fit.r2);
    let c = (-fit.intercept).exp();
    Ok(DecayFit {
        epsilon: Some(fit.slope),
        c: Some(c),
        r2: Some(fit.r2),
        claim: fit.r2 >= R2_CLAIM,
        sub_exponential,
        sigma_fit: gevrey_order(&derivative_sups, c),
        derivative_sups,
        window,
        nonzero_modes: nonzero.len(),
        trivial: false,
    })
}

fn x_ln_x(x: u32) -> f64 {
    if x == 0 {
        0.0
    } else {
        x as f64 * (x as f64).ln()
    }
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Coefficient of `ln k!` in `ln(M_k / C) ≈ a + b k + σ ln k!`.
fn gevrey_order(sups: &[f64], c: f64) -> Option<f64> {
    let (rows, ys): (Vec<Vec<f64>>, Vec<f64>) = sups
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > FLOOR)
        .map(|(k, m)| (vec![1.0, k as f64, ln_factorial(k as u32)], (m / c).ln()))
        .unzip();
    if rows.len() < 4 {
        return None;
    }
    least_squares(&rows, &ys).map(|coef| coef[2])
}

/// One entry `S(M, k)` of the seminorm table, stored through its log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmEntry {
    pub m: u32,
    pub k: u32,
    /// `ln S(M, k)`; `-inf` when the field vanishes.
    pub log_s: f64,
    /// Share of `S²` carried by the last stored mode, at the maximizing `t`.
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmTable {
    pub entries: Vec<PmEntry>,
    /// Coefficient of `M ln M` in `ln S(M, 0) ≈ a + bM + s·M ln M` (target `mμ`).
    pub m_slope: Option<f64>,
    /// Coefficient of `k ln k` in `ln S(0, k)` (target `σ`).
    pub k_slope: Option<f64>,
}

impl PmTable {
    pub fn get(&self, m: u32, k: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.m == m && e.k == k).map(|e| e.log_s.exp())
    }

    /// Writes `M,k,S,log_S,tail_fraction`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["M", "k", "S", "log_S", "tail_fraction"])?;
        for e in &self.entries {
            wr.write_record([e.m.to_string(), e.k.to_string(), fmt_float(e.log_s.exp()), fmt_float(e.log_s), fmt_float(e.tail_fraction)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `S(M, k) = sup_t (Σ_j λ_j^{2M} |∂_t^k u_j(t)|²)^{1/2}` for `M <= m_max`,
/// `k <= k_max`, accumulated in log space.
pub fn pm_seminorms(u: &ModeField, m_max: u32, k_max: u32) -> PmTable {
    let n = u.grid_size();
    let defined: Vec<(f64, &crate::torus::TorusFunction)> =
        u.entries().iter().enumerate().filter_map(|(j, e)| e.as_ref().map(|f| (u.lambda(j).abs().ln(), f))).collect();
    let last = defined.len().saturating_sub(1);
    let mut entries = Vec::new();
    for k in 0..=k_max {
        // ln |∂^k u_j(t_i)|² per mode
        let logs: Vec<Vec<f64>> = defined
            .iter()
            .map(|(_, f)| {
                let d = if k == 0 { (*f).clone() } else { f.derivative_n(k) };
                d.samples().iter().map(|z| 2.0 * z.norm().max(0.0).ln()).collect()
            })
            .collect();
        for m in 0..=m_max {
            let mut best = f64::NEG_INFINITY;
            let mut tail = 0.0;
            let mut terms = vec![0.0; defined.len()];
            for i in 0..n {
                for (slot, ((ll, _), lg)) in terms.iter_mut().zip(defined.iter().zip(&logs)) {
                    *slot = if lg[i] == f64::NEG_INFINITY { f64::NEG_INFINITY } else { 2.0 * m as f64 * ll + lg[i] };
                }
                let total = log_sum_exp(&terms);
                if total > best {
                    best = total;
                    tail = if defined.is_empty() { 0.0 } else { (terms[last] - total).exp() };
                }
            }
            entries.push(PmEntry { m, k, log_s: 0.5 * best, tail_fraction: if best.is_finite() { tail } else { 0.0 } });
        }
    }
    let slope = |pick: &dyn Fn(&PmEntry) -> Option<u32>| {
        let (rows, ys): (Vec<Vec<f64>>, Vec<f64>) = entries
            .iter()
            .filter(|e| e.log_s.is_finite())
            .filter_map(|e| pick(e).map(|x| (vec![1.0, x as f64, x_ln_x(x)], e.log_s)))
            .unzip();
        if rows.len() < 4 {
            None
        } else {
            least_squares(&rows, &ys).map(|c| c[2])
        }
    };
    let m_slope = slope(&|e: &PmEntry| (e.k == 0).then_some(e.m));
    let k_slope = slope(&|e: &PmEntry| (e.m == 0).then_some(e.k));
    PmTable { entries, m_slope, k_slope }
}

/// Applies `x` to Hermite coefficients.
fn ladder_x(c: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); c.len() + 1];
    for (j, v) in c.iter().enumerate() {
        out[j + 1] += v * ((j + 1) as f64 / 2.0).sqrt();
        if j > 0 {
            out[j - 1] += v * (j as f64 / 2.0).sqrt();
        }
    }
    out
}

/// Applies `d/dx` to Hermite coefficients.
fn ladder_dx(c: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); c.len() + 1];
    for (j, v) in c.iter().enumerate() {
        out[j + 1] -= v * ((j + 1) as f64 / 2.0).sqrt();
        if j > 0 {
            out[j - 1] += v * (j as f64 / 2.0).sqrt();
        }
    }
    out
}

/// Grid step of the `x` synthesis.
pub const X_STEP: f64 = 1.0 / 64.0;

/// `sup_{t,x} |x^α ∂_x^β ∂_t^k u(t, x)|` with `u = Σ_j u_j(t) φ_j(x)`.
pub fn x_seminorms(u: &ModeField, basis: &HermiteBasis, alpha: u32, beta: u32, k: u32) -> Result<f64, DiagnosticsError> {
    let dim = u.eigs().dimension();
    if dim != 1 {
        return Err(DiagnosticsError::DimensionUnsupported(dim));
    }
    if alpha > 8 || beta > 8 {
        return Err(DiagnosticsError::InvalidParams("alpha and beta are limited to 8".into()));
    }
    let n = u.grid_size();
    let modes = u.modes();
    let dt: Vec<Option<Vec<Complex64>>> = u
        .entries()
        .iter()
        .map(|e| e.as_ref().map(|f| if k == 0 { f.samples().to_vec() } else { f.derivative_n(k).samples().to_vec() }))
        .collect();
    let width = modes + (alpha + beta) as usize;
    let half = (2.0 * width as f64 + 1.0).sqrt() + 6.0;
    let steps = (half / X_STEP).ceil() as i64;
    let xs: Vec<f64> = (-steps..=steps).map(|i| i as f64 * X_STEP).collect();
    let mut sup: f64 = 0.0;
    for i in 0..n {
        let mut coeffs: Vec<Complex64> =
            dt.iter().map(|d| d.as_ref().map(|v| v[i]).unwrap_or_default()).collect();
        for _ in 0..beta {
            coeffs = ladder_dx(&coeffs);
        }
        for _ in 0..alpha {
            coeffs = ladder_x(&coeffs);
        }
        if coeffs.iter().all(|c| c.norm() == 0.0) {
            continue;
        }
        for v in basis.synthesize_x(&coeffs, &xs) {
            sup = sup.max(v.norm());
        }
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma25Report {
    /// `C(ℓ)` for `ℓ = 0..=ell_max` (`C(0) = 1`).
    pub c: Vec<f64>,
    /// Maximizing `j` per `ℓ`.
    pub argmax: Vec<u64>,
    pub max: f64,
    /// `(sγ/ε)^{sγ}`, an upper bound for every `C(ℓ)`.
    pub analytic_bound: f64,
    pub bounded: bool,
}

fn lemma_log_term(j: u64, ell: u32, gamma: f64, s: f64, eps: f64) -> f64 {
    ell as f64 * gamma * (j as f64).ln() - eps * (j as f64).powf(1.0 / s)
}

/// `C(ℓ) = (max_{1<=j<=j_max} j^{ℓγ} e^{-ε j^{1/s}} / (ℓ!)^{sγ})^{1/ℓ}`. The
/// exponent is unimodal in `j` with its real maximum at `(ℓγs/ε)^s`, so only
/// the two neighbouring integers are evaluated.
pub fn lemma25_check(gamma: f64, s: f64, eps: f64, ell_max: u32, j_max: u64) -> Result<Lemma25Report, DiagnosticsError> {
    if !(gamma > 0.0 && s > 0.0 && eps > 0.0) || j_max == 0 {
        return Err(DiagnosticsError::InvalidParams("gamma, s, epsilon must be positive".into()));
    }
    let mut c = vec![1.0];
    let mut argmax = vec![1];
    for ell in 1..=ell_max {
        let star = (ell as f64 * gamma * s / eps).powf(s);
        let lo = (star.floor() as u64).clamp(1, j_max);
        let hi = (star.ceil() as u64).clamp(1, j_max);
        let (j, best) = [lo, hi]
            .into_iter()
            .map(|j| (j, lemma_log_term(j, ell, gamma, s, eps)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .unwrap_or((1, 0.0));
        c.push(((best - s * gamma * ln_factorial(ell)) / ell as f64).exp());
        argmax.push(j);
    }
    let max = c.iter().cloned().fold(0.0, f64::max);
    let analytic_bound = (s * gamma / eps).powf(s * gamma);
    let bounded = c.iter().skip(1).all(|v| *v <= analytic_bound * (1.0 + 1e-12));
    Ok(Lemma25Report { c, argmax, max, analytic_bound, bounded })
}

/// Direct maximization over every `j <= j_max`; the reference for [`lemma25_check`].
pub fn lemma25_brute(gamma: f64, s: f64, eps: f64, ell: u32, j_max: u64) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let best = (1..=j_max).map(|j| lemma_log_term(j, ell, gamma, s, eps)).fold(f64::NEG_INFINITY, f64::max);
    ((best - s * gamma * ln_factorial(ell)) / ell as f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityLoss {
    pub sigma_u: f64,
    pub sigma_f: f64,
    /// `m·μ`.
    pub m_mu: f64,
    /// `max(σ, mμ)`: the Gevrey order the solution is guaranteed.
    pub predicted_order: f64,
    /// `max(σ_fit(f), mμ)`, the bound compared against `σ_fit(u)`.
    pub bound: f64,
    /// `mμ > σ`: a loss of `t`-regularity is possible.
    pub loss_possible: bool,
    pub within_bound: bool,
}

/// Tolerance on `σ_fit(u) <= bound` for finite-order fits.
pub const ORDER_SLACK: f64 = 0.5;

pub fn regularity_loss_report(f_fit: &DecayFit, u_fit: &DecayFit, params: &GSParams) -> Result<RegularityLoss, DiagnosticsError> {
    let sigma_f = f_fit.sigma_fit.ok_or_else(|| DiagnosticsError::FitUnavailable("no Gevrey fit for f".into()))?;
    let sigma_u = u_fit.sigma_fit.ok_or_else(|| DiagnosticsError::FitUnavailable("no Gevrey fit for u".into()))?;
    let m_mu = params.m as f64 * params.mu;
    let bound = sigma_f.max(m_mu);
    Ok(RegularityLoss {
        sigma_u,
        sigma_f,
        m_mu,
        predicted_order: params.sigma.max(m_mu),
        bound,
        loss_possible: m_mu > params.sigma,
        within_bound: sigma_u <= bound + ORDER_SLACK,
    })
}
