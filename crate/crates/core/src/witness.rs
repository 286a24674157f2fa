//! Singular solutions of `Lu = f` with `f` regular: Gevrey cutoffs, resonant
//! and Liouville witnesses for constant coefficients, the change-of-sign and
//! plateau constructions, and the reduction to a real coefficient.
//!
//! Every mode equation is `u' + iλc u = f`. A witness mode has the shape
//! `u = g · exp(λ(B - iA))` where `B`, `A` are primitives of `Im c`, `Re c`
//! anchored at a maximum of `sign(λ)·B`, so `Lu = g' · exp(λ(B - iA))` lives
//! on the ramps of `g` where the exponent is at least `c*` below its peak.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::diophantine::{classify_rational_exact, Alpha};
use crate::error::WitnessError;
use crate::io::fmt_float;
use crate::regression::ols;
use crate::solver::apply_mode;
use crate::spectrum::EigenSequence;
use crate::torus::{grid_point, TorusFunction};

pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_GRID: usize = 2048;
/// Per-mode tolerance on `sup|Lu - f|` for the variable constructions.
pub const RESIDUAL_TOL: f64 = 1e-7;
/// Per-mode tolerance for the constant-coefficient witness.
pub const CONSTANT_RESIDUAL_TOL: f64 = 1e-9;
/// Threshold below which samples of `Im c` count as zero.
pub const TOL_SIGN: f64 = 1e-10;
const RAMP_WIDTH: f64 = 0.5;
const MIN_RAMP_POINTS: usize = 4;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `S(x) = 1 / (1 + exp(x^{-p} - (1-x)^{-p}))`, a Gevrey-`(1+1/p)` step from
/// 0 at `x <= 0` to 1 at `x >= 1`.
fn smooth_step(x: f64, p: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (x.powf(-p) - (1.0 - x).powf(-p)).exp())
    }
}

fn smooth_step_deriv(x: f64, p: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let s = smooth_step(x, p);
    let d = s * (1.0 - s) * p * (x.powf(-p - 1.0) + (1.0 - x).powf(-p - 1.0));
    if d.is_finite() {
        d
    } else {
        0.0
    }
}

/// A Gevrey-`σ` cutoff equal to 1 on `[γ, δ]` and 0 outside `[α, β]`.
///
/// The window may sit anywhere on the real line as long as `β - α < 2π`;
/// evaluation reduces `t` into `[α, α + 2π)`.
#[derive(Debug, Clone)]
pub struct GevreyBump {
    sigma: f64,
    support: (f64, f64),
    plateau: (f64, f64),
    samples: TorusFunction,
}

impl GevreyBump {
    /// Bump with `0 < α < γ < δ < β < 2π`.
    pub fn new(sigma: f64, support: (f64, f64), plateau: (f64, f64), n: usize) -> Result<Self, WitnessError> {
        let (a, b) = support;
        let (g, d) = plateau;
        if !(0.0 < a && a < g && g < d && d < b && b < 2.0 * PI) {
            return Err(WitnessError::InvalidBump(format!("need 0 < α < γ < δ < β < 2π, got {support:?} / {plateau:?}")));
        }
        Self::windowed(sigma, support, plateau, n)
    }

    pub(crate) fn windowed(sigma: f64, support: (f64, f64), plateau: (f64, f64), n: usize) -> Result<Self, WitnessError> {
        if !(sigma > 1.0) || !sigma.is_finite() {
            return Err(WitnessError::InvalidBump(format!("sigma must exceed 1, got {sigma}")));
        }
        let (a, b) = support;
        let (g, d) = plateau;
        if !(a < g && g <= d && d < b && b - a < 2.0 * PI) {
            return Err(WitnessError::InvalidBump(format!("bad window {support:?} / {plateau:?}")));
        }
        let mut bump = Self { sigma, support, plateau, samples: TorusFunction::zeros(n)? };
        let samples: Vec<Complex64> = (0..n).map(|i| Complex64::new(bump.value(grid_point(i, n)), 0.0)).collect();
        bump.samples = TorusFunction::from_samples(samples)?;
        Ok(bump)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn plateau(&self) -> (f64, f64) {
        self.plateau
    }

    pub fn samples(&self) -> &TorusFunction {
        &self.samples
    }

    fn exponent(&self) -> f64 {
        1.0 / (self.sigma - 1.0)
    }

    fn reduce(&self, t: f64) -> f64 {
        let a = self.support.0;
        a + (t - a).rem_euclid(2.0 * PI)
    }

    /// Value at an unreduced point of the window's own period.
    fn value_in_window(&self, t: f64) -> f64 {
        let (a, b) = self.support;
        let (g, d) = self.plateau;
        let p = self.exponent();
        if t <= a || t >= b {
            return 0.0;
        }
        if t >= g && t <= d {
            return 1.0;
        }
        smooth_step((t - a) / (g - a), p) * smooth_step((b - t) / (b - d), p)
    }

    fn derivative_in_window(&self, t: f64) -> f64 {
        let (a, b) = self.support;
        let (g, d) = self.plateau;
        let p = self.exponent();
        if t <= a || t >= b || (t >= g && t <= d) {
            return 0.0;
        }
        let (wl, wr) = (g - a, b - d);
        let (xl, xr) = ((t - a) / wl, (b - t) / wr);
        smooth_step_deriv(xl, p) / wl * smooth_step(xr, p) - smooth_step(xl, p) * smooth_step_deriv(xr, p) / wr
    }

    pub fn value(&self, t: f64) -> f64 {
        self.value_in_window(self.reduce(t))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.derivative_in_window(self.reduce(t))
    }
}

/// Builds a [`GevreyBump`] sampled on an `n`-point grid.
pub fn gevrey_bump(sigma: f64, support: (f64, f64), plateau: (f64, f64), n: usize) -> Result<GevreyBump, WitnessError> {
    GevreyBump::new(sigma, support, plateau, n)
}

/// A change of sign of a cyclic sample sequence: the nonzero sign before,
/// the zero run in between (possibly empty) and the nonzero sign after.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Transition {
    /// Unwrapped index of the first sample after the last nonzero one.
    pub start: i64,
    pub zero_run: usize,
    pub from_positive: bool,
}

/// All sign changes of `vals` read cyclically, with `|v| < tol` counted as zero.
pub(crate) fn sign_transitions(vals: &[f64], tol: f64) -> Vec<Transition> {
    let n = vals.len();
    let sign = |v: f64| if v > tol { 1 } else if v < -tol { -1 } else { 0 };
    let Some(first) = (0..n).find(|&i| sign(vals[i]) != 0) else { return Vec::new() };
    let mut out = Vec::new();
    let mut last = sign(vals[first]);
    let mut run = 0usize;
    for k in 1..=n {
        let idx = first + k;
        let s = sign(vals[idx % n]);
        if s == 0 {
            run += 1;
            continue;
        }
        if s != last {
            out.push(Transition { start: (idx - run) as i64, zero_run: run, from_positive: last > 0 });
        }
        last = s;
        run = 0;
    }
    out
}

/// Whether a change of sign is crossed transversally or across a plateau.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Transversal,
    Plateau,
}

/// Zero runs longer than `n / PLATEAU_FRACTION` samples count as plateaus.
pub const PLATEAU_FRACTION: usize = 16;

/// Geometry of a bump witness on an `n`-point grid. Indices are unwrapped
/// (they may be negative or exceed `n`); times are `index · 2π/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub grid: usize,
    pub pattern: Pattern,
    /// Sign of the eigenvalues the witness is built for.
    pub orientation: f64,
    /// `t*`, reduced to `[0, 2π)`.
    pub anchor: f64,
    pub anchor_index: i64,
    /// Index range where `sign·B` attains its maximum (a single point for a
    /// transversal crossing).
    pub top: (i64, i64),
    pub support: (i64, i64),
    pub plateau: (i64, i64),
    /// `max B - max_{ramps} B`.
    pub margin: f64,
    /// `margin / 2`.
    pub c_star: f64,
}

impl Partition {
    fn time(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.grid as f64
    }

    pub fn support_times(&self) -> (f64, f64) {
        (self.time(self.support.0), self.time(self.support.1))
    }

    pub fn plateau_times(&self) -> (f64, f64) {
        (self.time(self.plateau.0), self.time(self.plateau.1))
    }
}

/// Unwrapped primitives `B(k) = b0·t_k + Im P(t_k)`, `A(k) = a0·t_k + Re P(t_k)`.
struct Primitives {
    n: usize,
    h: f64,
    a0: f64,
    b0: f64,
    periodic: Vec<Complex64>,
}

impl Primitives {
    fn new(c: &TorusFunction) -> Self {
        let d = c.decompose_mean();
        let n = c.len();
        Self { n, h: 2.0 * PI / n as f64, a0: d.a0, b0: d.b0, periodic: d.tilde_primitive.samples().to_vec() }
    }

    fn at(&self, k: i64) -> Complex64 {
        let i = k.rem_euclid(self.n as i64) as usize;
        let t = k as f64 * self.h;
        Complex64::new(self.a0 * t + self.periodic[i].re, self.b0 * t + self.periodic[i].im)
    }

    fn b(&self, k: i64) -> f64 {
        self.at(k).im
    }
}

/// Dominant sign of `λ_j` over the stored range (ties go to `+1`).
pub fn dominant_orientation(eigs: &EigenSequence) -> f64 {
    let pos = eigs.lambdas().iter().filter(|l| **l > 0.0).count();
    let neg = eigs.lambdas().iter().filter(|l| **l < 0.0).count();
    if neg > pos {
        -1.0
    } else {
        1.0
    }
}

/// Grid search for the partition of a change of sign of `orientation · Im c`
/// from `+` to `-`. With `window = Some((t0, t1))` only transitions whose
/// zero run meets `[t0, t1]` are considered.
pub fn find_partition(
    c: &TorusFunction,
    orientation: f64,
    pattern: Pattern,
    window: Option<(f64, f64)>,
) -> Result<Partition, WitnessError> {
    let missing = || match pattern {
        Pattern::Transversal => WitnessError::PartitionNotFound,
        Pattern::Plateau => WitnessError::PatternNotFound,
    };
    let n = c.len();
    let s = if orientation < 0.0 { -1.0 } else { 1.0 };
    let vals: Vec<f64> = c.samples().iter().map(|z| s * z.im).collect();
    let long = n / PLATEAU_FRACTION;
    let prim = Primitives::new(c);
    let bt = |k: i64| s * prim.b(k);
    let h = 2.0 * PI / n as f64;
    let mut best: Option<Partition> = None;
    for tr in sign_transitions(&vals, TOL_SIGN) {
        if !tr.from_positive {
            continue;
        }
        let is_plateau = tr.zero_run > long;
        if is_plateau != (pattern == Pattern::Plateau) {
            continue;
        }
        if let Some((t0, t1)) = window {
            let lo = tr.start as f64 * h;
            let hi = (tr.start + tr.zero_run.max(1) as i64 - 1) as f64 * h;
            let shift = 2.0 * PI * ((t0 - lo) / (2.0 * PI)).floor();
            let overlaps = |off: f64| lo + off <= t1 && hi + off >= t0;
            if !(overlaps(shift) || overlaps(shift + 2.0 * PI)) {
                continue;
            }
        }
        let (top_lo, top_hi, anchor) = if is_plateau {
            let lo = tr.start;
            let hi = tr.start + tr.zero_run as i64 - 1;
            let arg = (lo..=hi).max_by(|a, b| bt(*a).total_cmp(&bt(*b))).unwrap_or(lo);
            (lo, hi, arg)
        } else {
            let lo = tr.start - 1;
            let hi = tr.start + tr.zero_run as i64;
            let arg = (lo..=hi).max_by(|a, b| bt(*a).total_cmp(&bt(*b))).unwrap_or(lo);
            (arg, arg, arg)
        };
        let bref = (top_lo..=top_hi).map(bt).fold(f64::NEG_INFINITY, f64::max);
        let width = (top_hi - top_lo + 1) as usize;
        if width + 4 >= n {
            continue;
        }
        let reach = ((n - width) / 2 - 1) as i64;
        let left_ext = (1..=reach).take_while(|d| bt(top_lo - d) < bref).count() as i64;
        let right_ext = (1..=reach).take_while(|d| bt(top_hi + d) < bref).count() as i64;
        let wp = ((RAMP_WIDTH / h).round() as i64).min(left_ext / 2).min(right_ext / 2);
        if wp < MIN_RAMP_POINTS as i64 {
            continue;
        }
        let window_max = |from: i64| (from..=from + wp).map(bt).fold(f64::NEG_INFINITY, f64::max);
        // left ramp [sl, sl + wp] inside (top_lo - left_ext - 1, top_lo)
        let (sl, ml) = (top_lo - left_ext..=top_lo - 1 - wp)
            .map(|k| (k, window_max(k)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .ok_or_else(missing)?;
        let (er, mr) = (top_hi + 1..=top_hi + right_ext - wp)
            .map(|k| (k, window_max(k)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .ok_or_else(missing)?;
        let margin = bref - ml.max(mr);
        if !(margin > 1e-12) {
            continue;
        }
        if best.as_ref().is_some_and(|b| b.margin >= margin) {
            continue;
        }
        best = Some(Partition {
            grid: n,
            pattern,
            orientation: s,
            anchor: (anchor as f64 * h).rem_euclid(2.0 * PI),
            anchor_index: anchor,
            top: (top_lo, top_hi),
            support: (sl, er + wp),
            plateau: (sl + wp, er),
            margin,
            c_star: margin / 2.0,
        });
    }
    best.ok_or_else(missing)
}

/// One active mode of a witness.
#[derive(Debug, Clone)]
pub struct WitnessMode {
    pub j: usize,
    pub lambda: f64,
    pub u: TorusFunction,
    pub f: TorusFunction,
    pub sup_u: f64,
    pub sup_f: f64,
    /// `|u_j|` at the anchor point.
    pub anchor_u: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    Constant,
    SignChange,
    Plateau,
    L0Reduction,
}

/// Exponential fit `ln sup|f_j| ≈ C - rate · x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayLine {
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessMeta {
    pub kind: WitnessKind,
    pub sigma: Option<f64>,
    pub partition: Option<Partition>,
    pub levels: Vec<usize>,
    pub kappa: Option<String>,
    /// `∫ φ` for the real-coefficient reduction.
    pub bump_integral: Option<f64>,
    pub residual_tol: f64,
}

/// Sparse witness: only the listed modes are nonzero.
#[derive(Debug, Clone)]
pub struct WitnessBundle {
    pub meta: WitnessMeta,
    pub modes: Vec<WitnessMode>,
    /// `(t_i, B(t_i) - B(t*), A(t_i) - A(t*))` on the witness grid.
    pub primitives: Vec<(f64, f64, f64)>,
}

impl WitnessBundle {
    pub fn max_residual(&self) -> f64 {
        self.modes.iter().map(|m| m.residual).fold(0.0, f64::max)
    }

    pub fn residuals_ok(&self) -> bool {
        self.modes.iter().all(|m| m.residual < self.meta.residual_tol)
    }

    /// Lower bound on `sup_t |u_j|` over the active modes.
    pub fn min_sup_u(&self) -> f64 {
        self.modes.iter().map(|m| m.sup_u).fold(f64::INFINITY, f64::min)
    }

    pub fn f_vanishes(&self) -> bool {
        self.modes.iter().all(|m| m.sup_f == 0.0)
    }

    fn decay_against(&self, x: impl Fn(&WitnessMode) -> f64) -> Option<DecayLine> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.modes.iter().filter(|m| m.sup_f > 1e-300).map(|m| (x(m), m.sup_f.ln())).unzip();
        let fit = ols(&xs, &ys)?;
        Some(DecayLine { rate: -fit.slope, intercept: fit.intercept, r2: fit.r2, points: xs.len() })
    }

    /// Fit of `sup|f_j|` against `|λ_j|`.
    pub fn decay_vs_lambda(&self) -> Option<DecayLine> {
        self.decay_against(|m| m.lambda.abs())
    }

    /// Fit of `sup|f_j|` against `(j+1)^e`.
    pub fn decay_vs_index(&self, exponent: f64) -> Option<DecayLine> {
        self.decay_against(|m| ((m.j + 1) as f64).powf(exponent))
    }

    pub fn manifest(&self, exponent: f64) -> Value {
        let table: Vec<Value> = self
            .modes
            .iter()
            .map(|m| json!({"j": m.j, "lambda": m.lambda, "grid": m.u.len(), "sup_u": m.sup_u, "sup_f": m.sup_f, "anchor_u": m.anchor_u, "residual": m.residual}))
            .collect();
        json!({
            "meta": self.meta,
            "modes": table,
            "max_residual": self.max_residual(),
            "residuals_ok": self.residuals_ok(),
            "min_sup_u": self.min_sup_u(),
            "f_vanishes": self.f_vanishes(),
            "decay_vs_lambda": self.decay_vs_lambda(),
            "decay_vs_index": self.decay_vs_index(exponent),
        })
    }

    /// `j,lambda,sup_u,sup_f,residual` per active mode.
    pub fn write_table_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "lambda", "sup_u", "sup_f", "residual"])?;
        for m in &self.modes {
            wr.write_record([m.j.to_string(), fmt_float(m.lambda), fmt_float(m.sup_u), fmt_float(m.sup_f), fmt_float(m.residual)])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// `j,i,t,u_re,u_im,f_re,f_im` for every active mode.
    pub fn write_modes_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "i", "t", "u_re", "u_im", "f_re", "f_im"])?;
        for m in &self.modes {
            let n = m.u.len();
            for (i, (u, f)) in m.u.samples().iter().zip(m.f.samples()).enumerate() {
                wr.write_record([
                    m.j.to_string(),
                    i.to_string(),
                    fmt_float(grid_point(i, n)),
                    fmt_float(u.re),
                    fmt_float(u.im),
                    fmt_float(f.re),
                    fmt_float(f.im),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

fn sup(v: &TorusFunction) -> f64 {
    v.sup_norm()
}

fn residual(lambda: f64, c: &TorusFunction, u: &TorusFunction, f: &TorusFunction) -> Result<f64, WitnessError> {
    Ok(sup(&apply_mode(lambda, c, u)?.sub(f)?))
}

/// Shared assembly for the sign-change and plateau constructions.
fn bump_witness(
    c: &TorusFunction,
    eigs: &EigenSequence,
    part: Partition,
    sigma: f64,
    kind: WitnessKind,
) -> Result<WitnessBundle, WitnessError> {
    let n = c.len();
    let h = 2.0 * PI / n as f64;
    let prim = Primitives::new(c);
    let anchor = prim.at(part.anchor_index);
    let (sa, sb) = part.support_times();
    let (pa, pb) = part.plateau_times();
    let bump = GevreyBump::windowed(sigma, (sa, sb), (pa, pb), 16)?;
    let mut window = Vec::with_capacity((part.support.1 - part.support.0 + 1) as usize);
    for k in part.support.0..=part.support.1 {
        let t = k as f64 * h;
        let p = prim.at(k) - anchor;
        window.push((k.rem_euclid(n as i64) as usize, bump.value_in_window(t), bump.derivative_in_window(t), p.im, p.re));
    }
    let anchor_slot = part.anchor_index.rem_euclid(n as i64) as usize;
    let mut modes = Vec::new();
    for (j, &lambda) in eigs.lambdas().iter().enumerate() {
        if lambda * part.orientation <= 0.0 {
            continue;
        }
        let mut u = vec![Complex64::zero(); n];
        let mut f = vec![Complex64::zero(); n];
        for &(i, g, dg, b, a) in &window {
            let e = (Complex64::new(lambda * b, -lambda * a)).exp();
            u[i] = e * g;
            f[i] = e * dg;
        }
        let u = TorusFunction::from_samples(u)?;
        let f = TorusFunction::from_samples(f)?;
        let residual = residual(lambda, c, &u, &f)?;
        modes.push(WitnessMode {
            j,
            lambda,
            sup_u: sup(&u),
            sup_f: sup(&f),
            anchor_u: u.samples()[anchor_slot].norm(),
            u,
            f,
            residual,
        });
    }
    if modes.is_empty() {
        return Err(WitnessError::InvalidInput("no eigenvalue has the orientation of the partition".into()));
    }
    let primitives = (0..n)
        .map(|i| {
            let k = part.anchor_index - (n / 2) as i64 + ((i as i64 - part.anchor_index + (n / 2) as i64).rem_euclid(n as i64));
            let p = prim.at(k) - anchor;
            (grid_point(i, n), p.im, p.re)
        })
        .collect();
    Ok(WitnessBundle {
        meta: WitnessMeta {
            kind,
            sigma: Some(sigma),
            levels: modes.iter().map(|m| m.j).collect(),
            partition: Some(part),
            kappa: None,
            bump_integral: None,
            residual_tol: RESIDUAL_TOL,
        },
        modes,
        primitives,
    })
}

/// Witness across a transversal change of sign of `Im c`, built on an
/// `n`-point grid with Gevrey-`σ` ramps for every `λ_j` of the dominant sign.
pub fn sign_change_witness(c: &TorusFunction, eigs: &EigenSequence, n: usize, sigma: f64) -> Result<WitnessBundle, WitnessError> {
    let cn = c.resample(n)?;
    let part = find_partition(&cn, dominant_orientation(eigs), Pattern::Transversal, None)?;
    bump_witness(&cn, eigs, part, sigma, WitnessKind::SignChange)
}

/// Witness across a `(+, 0, -)` plateau of `Im c`, optionally restricted to
/// plateaus meeting `interval`.
pub fn plateau_witness(
    c: &TorusFunction,
    interval: Option<(f64, f64)>,
    eigs: &EigenSequence,
    n: usize,
    sigma: f64,
) -> Result<WitnessBundle, WitnessError> {
    let cn = c.resample(n)?;
    let part = find_partition(&cn, dominant_orientation(eigs), Pattern::Plateau, interval)?;
    bump_witness(&cn, eigs, part, sigma, WitnessKind::Plateau)
}

/// `(j, λ_j, τ, τ - αλ_j)` along the witness subsequence.
struct Level {
    j: usize,
    lambda: f64,
    tau: i64,
    defect: f64,
}

fn alpha_levels(alpha: &Alpha, eigs: &EigenSequence, count: usize) -> Result<(Vec<Level>, String), WitnessError> {
    if count == 0 {
        return Err(WitnessError::InvalidInput("need at least one level".into()));
    }
    let to_level = |j: usize, lambda: &num_bigint::BigInt, tau: &num_bigint::BigInt, kappa: &BigRational| -> Result<Level, WitnessError> {
        let defect = BigRational::from_integer(tau.clone()) - kappa * BigRational::from_integer(lambda.clone());
        Ok(Level {
            j,
            lambda: lambda.to_f64().unwrap_or(f64::NAN),
            tau: tau.to_i64().ok_or_else(|| WitnessError::InvalidInput("τ exceeds 64 bits".into()))?,
            defect: defect.to_f64().unwrap_or(0.0),
        })
    };
    if let Alpha::Certified(cert) = alpha {
        cert.verify().map_err(|_| WitnessError::NoCertificate)?;
        let levels = cert
            .levels
            .iter()
            .take(count)
            .map(|l| to_level(l.j, &l.lambda, &l.tau, &cert.kappa))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok((levels, cert.kappa.to_string()));
    }
    let kappa = alpha.exact().ok_or(WitnessError::NoCertificate)?;
    let verdict = classify_rational_exact(&kappa, eigs).map_err(|_| WitnessError::NoCertificate)?;
    if !verdict.resonant {
        return Err(WitnessError::NoCertificate);
    }
    let mut levels = Vec::new();
    for &j in verdict.resonant_sample.iter().take(count) {
        let lambda = eigs.int_lambda_at(j).ok_or(WitnessError::NoCertificate)?;
        let tau = (&kappa * BigRational::from_integer(lambda.clone())).to_integer();
        levels.push(to_level(j, &lambda, &tau, &kappa)?);
    }
    Ok((levels, kappa.to_string()))
}

fn grid_for_frequency(freq: f64, floor: usize) -> usize {
    ((4.0 * freq).ceil() as usize + 8).next_power_of_two().max(floor).max(4)
}

/// `u_ℓ = e^{-iτ_ℓ t}`, `f_ℓ = -i(τ_ℓ - αλ_{j_ℓ}) e^{-iτ_ℓ t}` on the resonant
/// indices of an exact rational `α` or the levels of a certificate.
pub fn constant_witness(alpha: &Alpha, eigs: &EigenSequence, levels: usize) -> Result<WitnessBundle, WitnessError> {
    let (lv, kappa) = alpha_levels(alpha, eigs, levels)?;
    let a = alpha.to_f64();
    let mut modes = Vec::with_capacity(lv.len());
    for l in &lv {
        let n = grid_for_frequency(l.tau.unsigned_abs() as f64, 16);
        let phase = |i: usize| {
            let r = (l.tau as i128 * i as i128).rem_euclid(n as i128) as f64;
            Complex64::from_polar(1.0, -2.0 * PI * r / n as f64)
        };
        let u = TorusFunction::from_samples((0..n).map(phase).collect())?;
        let f = u.scale(-I * l.defect);
        let c = TorusFunction::constant(n, Complex64::new(a, 0.0))?;
        let residual = residual(l.lambda, &c, &u, &f)?;
        modes.push(WitnessMode { j: l.j, lambda: l.lambda, sup_u: sup(&u), sup_f: sup(&f), anchor_u: u.samples()[0].norm(), u, f, residual });
    }
    Ok(WitnessBundle {
        meta: WitnessMeta {
            kind: WitnessKind::Constant,
            sigma: None,
            partition: None,
            levels: lv.iter().map(|l| l.j).collect(),
            kappa: Some(kappa),
            bump_integral: None,
            residual_tol: CONSTANT_RESIDUAL_TOL,
        },
        modes,
        primitives: Vec::new(),
    })
}

/// Default cutoff for [`l0_reduction_witness`]: support `[π/2, 3π/2]`,
/// plateau `[3π/4, 5π/4]`, `σ = 2`.
pub fn default_reduction_bump(n: usize) -> Result<TorusFunction, WitnessError> {
    Ok(GevreyBump::new(DEFAULT_SIGMA, (PI / 2.0, 1.5 * PI), (0.75 * PI, 1.25 * PI), n)?.samples().clone())
}

/// Witness for a real coefficient `c = a(t)` whose mean is resonant or
/// certified Liouville. With `E(t) = exp(-iλ∫_0^t a)`, `q = E(2π)` and
/// `Φ(t) = ∫_0^t φ`, it sets `f = (1 - q)Eφ` and
/// `u = E[Φ + q(Φ(2π) - Φ)]`, so `|u(0)| = ∫φ` on every level while
/// `|f| <= 2π·dist(a_0λ, Z)·sup φ`.
pub fn l0_reduction_witness(
    c: &TorusFunction,
    alpha: &Alpha,
    phi: &TorusFunction,
    eigs: &EigenSequence,
    levels: usize,
) -> Result<WitnessBundle, WitnessError> {
    if c.max_imag() > 1e-12 {
        return Err(WitnessError::InvalidInput("Im c must vanish".into()));
    }
    let d = c.decompose_mean();
    let kappa = alpha.to_f64();
    if (d.a0 - kappa).abs() > 1e-9 * kappa.abs().max(1.0) {
        return Err(WitnessError::InvalidInput(format!("mean of Re c is {} but alpha is {kappa}", d.a0)));
    }
    let phi_total = phi.integral().re;
    if !(phi_total > 1e-14) || phi.max_imag() > 1e-12 {
        return Err(WitnessError::DegenerateBump);
    }
    let np = phi.len();
    let guard = np / 16;
    let near_zero = (0..=guard).chain(np - guard..np).map(|i| phi.samples()[i].norm()).fold(0.0, f64::max);
    if near_zero > 1e-12 {
        return Err(WitnessError::InvalidInput("φ must vanish near t = 0".into()));
    }
    let (lv, kappa_str) = alpha_levels(alpha, eigs, levels)?;
    let sup_a = c.re().sup_norm();
    let mut modes = Vec::with_capacity(lv.len());
    for l in &lv {
        let n = grid_for_frequency(l.lambda.abs() * sup_a, np.max(c.len()));
        let cn = c.resample(n)?;
        let dn = cn.decompose_mean();
        let phin = phi.resample(n)?.re();
        let pd = phin.decompose_mean();
        let omega = l.lambda * dn.a0 - l.tau as f64;
        let q = Complex64::from_polar(1.0, -2.0 * PI * omega);
        let mut u = Vec::with_capacity(n);
        let mut f = Vec::with_capacity(n);
        for i in 0..n {
            let t = grid_point(i, n);
            let r = (l.tau as i128 * i as i128).rem_euclid(n as i128) as f64;
            let theta = omega * t + 2.0 * PI * r / n as f64 + l.lambda * dn.tilde_primitive.samples()[i].re;
            let e = Complex64::from_polar(1.0, -theta);
            let big_phi = pd.a0 * t + pd.tilde_primitive.samples()[i].re;
            u.push(e * (big_phi + q * (phi_total - big_phi)));
            f.push(e * (Complex64::new(1.0, 0.0) - q) * phin.samples()[i].re);
        }
        let u = TorusFunction::from_samples(u)?;
        let f = TorusFunction::from_samples(f)?;
        let residual = residual(l.lambda, &cn, &u, &f)?;
        modes.push(WitnessMode { j: l.j, lambda: l.lambda, sup_u: sup(&u), sup_f: sup(&f), anchor_u: u.samples()[0].norm(), u, f, residual });
    }
    Ok(WitnessBundle {
        meta: WitnessMeta {
            kind: WitnessKind::L0Reduction,
            sigma: None,
            partition: None,
            levels: lv.iter().map(|l| l.j).collect(),
            kappa: Some(kappa_str),
            bump_integral: Some(phi_total),
            residual_tol: RESIDUAL_TOL,
        },
        modes,
        primitives: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{construct_liouville, ConstructOptions};
    use crate::spectrum::ModelKind;

    fn h1(n: usize) -> EigenSequence {
        EigenSequence::build(ModelKind::Harmonic1d, n).unwrap()
    }

    fn c_of(n: usize, f: impl Fn(f64) -> Complex64) -> TorusFunction {
        TorusFunction::from_fn(n, f).unwrap()
    }

    #[test]
    fn bump_examples() {
        let g = gevrey_bump(2.0, (1.0, 5.0), (2.0, 4.0), 256).unwrap();
        assert_eq!(g.value(3.0), 1.0);
        assert_eq!(g.value(0.5), 0.0);
        assert_eq!(g.value(1.0), 0.0);
        assert_eq!(g.value(2.0), 1.0);
        assert!(g.samples().samples().iter().all(|z| (0.0..=1.0).contains(&z.re)));
        assert!(gevrey_bump(1.0, (1.0, 5.0), (2.0, 4.0), 256).is_err());
        assert!(gevrey_bump(2.0, (1.0, 5.0), (0.5, 4.0), 256).is_err());
        // derivative against a centered difference
        for &t in &[1.3, 1.7, 4.4] {
            let fd = (g.value(t + 1e-6) - g.value(t - 1e-6)) / 2e-6;
            assert!((fd - g.derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn transitions_cyclic() {
        let v = [1.0, 0.0, -1.0, -1.0, 0.0, 0.0, 1.0];
        let t = sign_transitions(&v, 1e-10);
        assert_eq!(t.len(), 2);
        assert!(t[0].from_positive && t[0].zero_run == 1);
        assert!(!t[1].from_positive && t[1].zero_run == 2);
        assert!(sign_transitions(&[0.0; 4], 1e-10).is_empty());
        assert!(sign_transitions(&[1.0, 2.0, 0.0], 1e-10).is_empty());
    }

    #[test]
    fn sin_partition() {
        let c = c_of(1024, |t| Complex64::new(0.0, t.sin()));
        let p = find_partition(&c, 1.0, Pattern::Transversal, None).unwrap();
        assert!((p.anchor - PI).abs() < 1e-9);
        // B_{π}(t) = -(1 + cos t); best ramps hug t = 0
        let brute = 1.0 + (RAMP_WIDTH).cos();
        assert!((p.margin - brute).abs() < 0.02, "{}", p.margin);
        let none = c_of(256, |t| Complex64::new(0.0, 1.0 - t.cos()));
        assert_eq!(find_partition(&none, 1.0, Pattern::Transversal, None).unwrap_err(), WitnessError::PartitionNotFound);
    }

    #[test]
    fn sign_change_witness_verifies() {
        let e = h1(32);
        let c = c_of(64, |t| Complex64::new(0.5, t.sin()));
        let w = sign_change_witness(&c, &e, 1024, 2.0).unwrap();
        assert!(w.residuals_ok(), "{}", w.max_residual());
        assert!(w.modes.iter().all(|m| (m.anchor_u - 1.0).abs() < 1e-12));
        let fit = w.decay_vs_lambda().unwrap();
        assert!(fit.r2 > 0.95 && fit.rate >= w.meta.partition.as_ref().unwrap().c_star);
    }

    #[test]
    fn constant_witness_examples() {
        let e = h1(16);
        let w = constant_witness(&Alpha::Float(1.0), &e, 16).unwrap();
        assert_eq!(w.modes.len(), 16);
        assert!(w.f_vanishes() && w.residuals_ok());
        assert_eq!(constant_witness(&Alpha::Float(0.5), &e, 4).unwrap_err(), WitnessError::NoCertificate);
        assert_eq!(constant_witness(&Alpha::Float(2f64.sqrt()), &e, 4).unwrap_err(), WitnessError::NoCertificate);
        let cert = construct_liouville(&e, 0.5, 3, &ConstructOptions::default()).unwrap();
        let w = constant_witness(&Alpha::Certified(cert.clone()), &e, 3).unwrap();
        assert!(w.residuals_ok(), "{}", w.max_residual());
        for (m, l) in w.modes.iter().zip(&cert.levels) {
            assert!((m.sup_u - 1.0).abs() < 1e-12);
            assert!(m.sup_f <= (-((l.j + 1) as f64)).exp());
        }
    }

    #[test]
    fn reduction_witness() {
        let e = h1(16);
        let cert = construct_liouville(&e, 0.5, 3, &ConstructOptions::default()).unwrap();
        let k = cert.kappa_f64();
        let c = c_of(64, |t| Complex64::new(k + 0.3 * t.cos(), 0.0));
        let phi = default_reduction_bump(1024).unwrap();
        let w = l0_reduction_witness(&c, &Alpha::Certified(cert.clone()), &phi, &e, 3).unwrap();
        let total = w.meta.bump_integral.unwrap();
        assert!(w.residuals_ok(), "{}", w.max_residual());
        for (m, l) in w.modes.iter().zip(&cert.levels) {
            assert!((m.anchor_u - total).abs() < 1e-9);
            assert!(m.sup_f <= 2.0 * PI * l.gap_f64() + 1e-10);
        }
        let zero = TorusFunction::zeros(1024).unwrap();
        assert_eq!(l0_reduction_witness(&c, &Alpha::Certified(cert), &zero, &e, 3).unwrap_err(), WitnessError::DegenerateBump);
    }
}
