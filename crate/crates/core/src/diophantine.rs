//! Distance-to-integer analysis of `κλ_j`, exact rational classification and
//! a certified constructor of exponential Liouville numbers.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::DiophantineError;
use crate::io::fmt_float;
use crate::spectrum::EigenSequence;

/// `|x - round(x)|`, ties rounded away from zero.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

/// `(4d, |1 - e^{2πix}|, 2πd)` with `d = dist_to_int(x)`.
pub fn divisor_sandwich(x: f64) -> Sandwich {
    let d = dist_to_int(x);
    let arg = PI * d;
    Sandwich { lower: 4.0 * d, value: 2.0 * arg.sin(), upper: 2.0 * arg }
}

/// Natural log of a positive big integer.
pub(crate) fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * LN_2
}

fn big_ratio_ln(r: &BigRational) -> f64 {
    big_ln(r.numer()) - big_ln(r.denom())
}

/// Distance of an exact rational to the nearest integer.
fn rational_dist(x: &BigRational) -> BigRational {
    let frac = x - x.floor();
    let other = BigRational::one() - &frac;
    if frac <= other {
        frac
    } else {
        other
    }
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.125"`.
pub fn parse_rational(s: &str) -> Result<BigRational, DiophantineError> {
    let bad = || DiophantineError::BadRational(s.to_string());
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(DiophantineError::ZeroDenominator);
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let r = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -r } else { r })
}

/// Continued-fraction search for `p/q` with `q <= max_den` and
/// `|x - p/q| <= tol`.
pub fn approximate_rational(x: f64, tol: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Exact verdict for a rational `κ = p/q` against an integer spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalVerdict {
    pub p: i64,
    pub q: i64,
    /// `q | pλ_j` for infinitely many `j`.
    pub resonant: bool,
    /// `min_j d_j` as `(numerator, denominator)` when not resonant.
    pub floor: Option<(i64, i64)>,
    /// First few resonant indices inside the sampled range.
    pub resonant_sample: Vec<usize>,
    /// False when the spectrum is a finite table and only its range was checked.
    pub definitive: bool,
}

impl RationalVerdict {
    pub fn floor_value(&self) -> Option<f64> {
        self.floor.map(|(a, b)| a as f64 / b as f64)
    }
}

const SAMPLE_SPAN: usize = 4096;
const SAMPLE_LEN: usize = 32;

pub fn classify_rational(p: i64, q: i64, eigs: &EigenSequence) -> Result<RationalVerdict, DiophantineError> {
    if q <= 0 {
        return Err(DiophantineError::ZeroDenominator);
    }
    classify_rational_exact(&BigRational::new(BigInt::from(p), BigInt::from(q)), eigs)
}

/// Largest denominator whose full residue cycle is scanned.
const MAX_CYCLE: i64 = 10_000_000;

pub fn classify_rational_exact(kappa: &BigRational, eigs: &EigenSequence) -> Result<RationalVerdict, DiophantineError> {
    if !eigs.is_integer_valued() {
        return Err(DiophantineError::NonIntegerSpectrum);
    }
    let (Some(p), Some(q)) = (kappa.numer().to_i64(), kappa.denom().to_i64()) else {
        return Err(DiophantineError::BadRational(kappa.to_string()));
    };
    let pb = BigInt::from(p);
    let qb = BigInt::from(q);
    let numer_of = |r: &BigInt| -> i64 {
        // distance of p·r/q to Z, scaled by q
        let m = (&pb * r).mod_floor(&qb).to_i64().unwrap_or(0);
        m.min(q - m)
    };
    let cycle = if q <= MAX_CYCLE { eigs.residue_cycle(q as u64) } else { None };
    let (residues, definitive, span): (Vec<BigInt>, bool, usize) = match cycle {
        Some(cycle) => {
            let span = (4 * q as usize + 1).clamp(SAMPLE_SPAN, 2_000_000).max(eigs.len());
            (cycle.into_iter().map(BigInt::from).collect(), true, span)
        }
        None => ((0..eigs.len()).filter_map(|j| eigs.int_lambda_at(j)).collect(), false, eigs.len()),
    };
    let best = residues.iter().map(numer_of).min().unwrap_or(0);
    let resonant = best == 0;
    let resonant_sample = if resonant {
        (0..span)
            .filter(|&j| eigs.int_lambda_at(j).is_some_and(|l| numer_of(&l) == 0))
            .take(SAMPLE_LEN)
            .collect()
    } else {
        Vec::new()
    };
    let floor = (!resonant).then(|| {
        let g = best.gcd(&q);
        (best / g, q / g)
    });
    Ok(RationalVerdict { p, q, resonant, floor, resonant_sample, definitive })
}

/// A real constant as supplied by a caller: a double, an exact rational, or
/// a verified Liouville certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum Alpha {
    Float(f64),
    Rational(BigRational),
    Certified(LiouvilleCertificate),
}

/// Tolerance and denominator cap for recognizing doubles as rationals.
pub const RATIONAL_TOL: f64 = 1e-12;
pub const RATIONAL_MAX_DEN: i64 = 1_000_000;

impl Alpha {
    pub fn to_f64(&self) -> f64 {
        match self {
            Alpha::Float(x) => *x,
            Alpha::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Alpha::Certified(c) => c.kappa_f64(),
        }
    }

    /// The exact value, recognizing doubles within [`RATIONAL_TOL`] of a
    /// fraction with denominator at most [`RATIONAL_MAX_DEN`].
    pub fn exact(&self) -> Option<BigRational> {
        match self {
            Alpha::Float(x) => approximate_rational(*x, RATIONAL_TOL, RATIONAL_MAX_DEN)
                .map(|(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q))),
            Alpha::Rational(r) => Some(r.clone()),
            Alpha::Certified(c) => Some(c.kappa.clone()),
        }
    }
}

/// The value of `κ` behind a [`DistanceSequence`].
#[derive(Debug, Clone, PartialEq)]
pub enum Kappa {
    Float(f64),
    Rational(BigRational),
}

impl Kappa {
    pub fn to_f64(&self) -> f64 {
        match self {
            Kappa::Float(x) => *x,
            Kappa::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// `d_j = dist(κλ_j, Z)` for `j < J`, with `-ln d_j` kept separately so that
/// exact rationals far below the double range stay usable.
#[derive(Debug, Clone)]
pub struct DistanceSequence {
    kappa: Kappa,
    lambdas: Vec<f64>,
    d: Vec<f64>,
    neg_log_d: Vec<f64>,
    exponent: f64,
}

impl DistanceSequence {
    /// Float `κ`; `mu` sets the exponent `1/(2nμ)`.
    pub fn from_float(kappa: f64, eigs: &EigenSequence, mu: f64) -> Self {
        let d: Vec<f64> = eigs.lambdas().iter().map(|l| dist_to_int(kappa * l)).collect();
        let neg_log_d = d.iter().map(|&x| if x > 0.0 { -x.ln() } else { f64::INFINITY }).collect();
        Self { kappa: Kappa::Float(kappa), lambdas: eigs.lambdas().to_vec(), d, neg_log_d, exponent: exponent(eigs, mu) }
    }

    /// Exact `κ`; needs integer eigenvalues.
    pub fn from_rational(kappa: &BigRational, eigs: &EigenSequence, mu: f64) -> Result<Self, DiophantineError> {
        let mut d = Vec::with_capacity(eigs.len());
        let mut neg_log_d = Vec::with_capacity(eigs.len());
        for j in 0..eigs.len() {
            let l = eigs.int_lambda_at(j).ok_or(DiophantineError::NonIntegerSpectrum)?;
            let dist = rational_dist(&(kappa * BigRational::from_integer(l)));
            if dist.is_zero() {
                d.push(0.0);
                neg_log_d.push(f64::INFINITY);
            } else {
                d.push(dist.to_f64().unwrap_or(0.0));
                neg_log_d.push(-big_ratio_ln(&dist));
            }
        }
        Ok(Self {
            kappa: Kappa::Rational(kappa.clone()),
            lambdas: eigs.lambdas().to_vec(),
            d,
            neg_log_d,
            exponent: exponent(eigs, mu),
        })
    }

    pub fn kappa(&self) -> &Kappa {
        &self.kappa
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    pub fn neg_log_distances(&self) -> &[f64] {
        &self.neg_log_d
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Writes `j,lambda,kappa_lambda,d` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "lambda", "kappa_lambda", "d"])?;
        let k = self.kappa.to_f64();
        for (j, (l, d)) in self.lambdas.iter().zip(&self.d).enumerate() {
            wr.write_record([j.to_string(), fmt_float(*l), fmt_float(k * l), fmt_float(*d)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn exponent(eigs: &EigenSequence, mu: f64) -> f64 {
    1.0 / (2.0 * eigs.dimension() as f64 * mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LiouvilleClass {
    NonLiouvilleEvidence,
    LiouvilleSuspected,
    Undetermined,
}

/// Statistics of one dyadic window `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowFit {
    pub lo: usize,
    pub hi: usize,
    /// Least-squares slope of `-ln d_j` against `(j+1)^e` (nonzero `d_j` only).
    pub slope: Option<f64>,
    /// `max_j (-ln d_j - ln(2|λ_j|(j+1)))⁺ / (j+1)^e`: the exponential rate in
    /// excess of polynomial closeness.
    pub excess_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleFit {
    pub windows: Vec<WindowFit>,
    pub resonant: Vec<usize>,
    pub max_excess_rate: f64,
    /// `max / median` of the positive window slopes.
    pub slope_ratio: Option<f64>,
    pub classification: LiouvilleClass,
    pub heuristic: bool,
}

/// Thresholds for [`liouville_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitThresholds {
    pub min_window_start: usize,
    pub suspect_rate: f64,
    pub evidence_rate: f64,
}

impl Default for FitThresholds {
    fn default() -> Self {
        Self { min_window_start: 8, suspect_rate: 0.3, evidence_rate: 0.1 }
    }
}

pub fn liouville_fit(seq: &DistanceSequence) -> Result<LiouvilleFit, DiophantineError> {
    liouville_fit_with(seq, &FitThresholds::default())
}

pub fn liouville_fit_with(seq: &DistanceSequence, th: &FitThresholds) -> Result<LiouvilleFit, DiophantineError> {
    let total = seq.len();
    if total < 64 {
        return Err(DiophantineError::TooFewModes { needed: 64, got: total });
    }
    let resonant: Vec<usize> = (0..total).filter(|&j| seq.d[j] == 0.0 && seq.neg_log_d[j].is_infinite()).collect();
    if 2 * resonant.len() > total {
        return Err(DiophantineError::MostlyResonant { zeros: resonant.len(), total });
    }
    let e = seq.exponent;
    let mut windows = Vec::new();
    let mut lo = 1usize;
    while lo < total {
        let hi = (2 * lo).min(total);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut excess: f64 = 0.0;
        for j in lo..hi {
            let y = seq.neg_log_d[j];
            if !y.is_finite() {
                continue;
            }
            let x = ((j + 1) as f64).powf(e);
            xs.push(x);
            ys.push(y);
            let baseline = (2.0 * seq.lambdas[j].abs() * (j + 1) as f64).ln();
            excess = excess.max((y - baseline).max(0.0) / x);
        }
        let slope = crate::regression::ols(&xs, &ys).map(|f| f.slope);
        windows.push(WindowFit { lo, hi, slope, excess_rate: excess });
        lo = hi;
    }
    let max_excess_rate = windows
        .iter()
        .filter(|w| w.lo >= th.min_window_start)
        .map(|w| w.excess_rate)
        .fold(0.0, f64::max);
    let mut positive: Vec<f64> = windows.iter().filter_map(|w| w.slope).filter(|s| *s > 0.0).collect();
    positive.sort_by(|a, b| a.total_cmp(b));
    let slope_ratio = (!positive.is_empty()).then(|| positive[positive.len() - 1] / positive[positive.len() / 2]);
    let recurring_resonance = resonant.iter().filter(|&&j| j >= 1).count() >= 2;
    let classification = if recurring_resonance || max_excess_rate >= th.suspect_rate {
        LiouvilleClass::LiouvilleSuspected
    } else if max_excess_rate < th.evidence_rate {
        LiouvilleClass::NonLiouvilleEvidence
    } else {
        LiouvilleClass::Undetermined
    };
    Ok(LiouvilleFit { windows, resonant, max_excess_rate, slope_ratio, classification, heuristic: true })
}

/// Options of [`construct_liouville`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructOptions {
    pub start_index: usize,
    pub start_tau: i64,
    pub cap: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        Self { start_index: 1, start_tau: 1, cap: 1_000_000 }
    }
}

/// One certified level `|τ - κλ_j| <= exp(-x)` with `x >= (j+1)^{1/k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleLevel {
    pub j: usize,
    pub lambda: BigInt,
    pub tau: BigInt,
    pub gap: BigRational,
    pub log_target: BigRational,
}

impl LiouvilleLevel {
    pub fn target(&self) -> f64 {
        (-self.log_target.to_f64().unwrap_or(f64::INFINITY)).exp()
    }

    pub fn gap_f64(&self) -> f64 {
        self.gap.to_f64().unwrap_or(0.0)
    }

    /// `ln |gap|`, or `-inf` for an exact hit.
    pub fn gap_ln(&self) -> f64 {
        if self.gap.is_zero() {
            f64::NEG_INFINITY
        } else {
            big_ratio_ln(&self.gap)
        }
    }
}

/// Exact rational `κ` with levels `j_ℓ` at which `κλ_{j_ℓ}` is exponentially
/// close to the integer `τ_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleCertificate {
    pub kappa: BigRational,
    /// `k = 2nμ`; targets are `exp(-(j+1)^{1/k})`.
    pub root: u32,
    pub levels: Vec<LiouvilleLevel>,
}

/// Upper bound for `e`, used by the exact check.
fn e_upper() -> BigRational {
    BigRational::new(BigInt::from(27_182_818_285u64), BigInt::from(10_000_000_000u64))
}

/// Rational `a/b >= (j+1)^{1/k}` with `b` a small power of two.
fn log_target_for(j: usize, root: u32) -> BigRational {
    let jj = BigInt::from(j as u64 + 1);
    if root == 1 {
        return BigRational::from_integer(jj);
    }
    let b = BigInt::from(16);
    let mut a = BigInt::from((((j + 1) as f64).powf(1.0 / root as f64) * 16.0).ceil() as u64);
    while a.pow(root) < &jj * b.pow(root) {
        a += 1;
    }
    BigRational::new(a, b)
}

/// Exact test of `gap <= exp(-x)` for `x = a/b >= 0`: `gap^b · u^a <= 1` with `u > e`.
fn certify_gap(gap: &BigRational, x: &BigRational) -> bool {
    if gap.is_zero() {
        return true;
    }
    if x.is_negative() {
        return false;
    }
    // cheap float screen before the big powers
    let approx = big_ratio_ln(gap) + x.to_f64().unwrap_or(f64::INFINITY);
    if approx > 1e-6 {
        return false;
    }
    let (Some(a), Some(b)) = (x.numer().to_u32(), x.denom().to_u32()) else { return false };
    let lhs = num_traits::pow(gap.clone(), b as usize) * num_traits::pow(e_upper(), a as usize);
    lhs <= BigRational::one()
}

impl LiouvilleCertificate {
    pub fn kappa_f64(&self) -> f64 {
        self.kappa.to_f64().unwrap_or(f64::NAN)
    }

    /// Re-derives every gap from `κ` and checks it against its target, using
    /// exact arithmetic only.
    pub fn verify(&self) -> Result<(), DiophantineError> {
        for (i, lvl) in self.levels.iter().enumerate() {
            let gap = (BigRational::from_integer(lvl.tau.clone()) - &self.kappa * BigRational::from_integer(lvl.lambda.clone())).abs();
            let jj = BigInt::from(lvl.j as u64 + 1);
            let root_ok = num_traits::pow(lvl.log_target.numer().clone(), self.root as usize)
                >= jj * num_traits::pow(lvl.log_target.denom().clone(), self.root as usize);
            if gap != lvl.gap || !root_ok || !certify_gap(&gap, &lvl.log_target) {
                return Err(DiophantineError::CertificationFailed(i + 1));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .map(|l| {
                json!({
                    "j": l.j,
                    "lambda": l.lambda.to_string(),
                    "tau": l.tau.to_string(),
                    "gap": {"num": l.gap.numer().to_string(), "den": l.gap.denom().to_string()},
                    "ln_gap": if l.gap.is_zero() { Value::Null } else { json!(l.gap_ln()) },
                    "log_target": {"num": l.log_target.numer().to_string(), "den": l.log_target.denom().to_string()},
                })
            })
            .collect();
        json!({
            "kappa": {"num": self.kappa.numer().to_string(), "den": self.kappa.denom().to_string()},
            "kappa_approx": self.kappa_f64(),
            "root": self.root,
            "levels": levels,
            "verified": self.verify().is_ok(),
        })
    }
}

/// `2nμ` as a positive integer, or an error.
fn integer_root(eigs: &EigenSequence, mu: f64) -> Result<u32, DiophantineError> {
    let k = 2.0 * eigs.dimension() as f64 * mu;
    if !(k >= 1.0) || (k - k.round()).abs() > 1e-12 || k > 64.0 {
        return Err(DiophantineError::InvalidParams(format!("2nμ = {k} must be a positive integer")));
    }
    Ok(k.round() as u32)
}

/// Greedy construction over exact rationals. Level `ℓ + 1` shifts `κ` by
/// `δ = (round(κλ_j) - κλ_j)/λ_j` at the first admissible index `j` where the
/// shift stays within `2^{-(ℓ+1-i)}` of every earlier target; when no
/// nonzero shift is admissible below the cap it falls back to the first exact
/// hit `κλ_j ∈ Z`.
pub fn construct_liouville(
    eigs: &EigenSequence,
    mu: f64,
    levels: usize,
    opts: &ConstructOptions,
) -> Result<LiouvilleCertificate, DiophantineError> {
    if levels == 0 {
        return Err(DiophantineError::InvalidParams("need at least one level".into()));
    }
    if !eigs.is_integer_valued() {
        return Err(DiophantineError::NonIntegerSpectrum);
    }
    let root = integer_root(eigs, mu)?;
    let lam = |j: usize| eigs.int_lambda_at(j).ok_or(DiophantineError::NonIntegerSpectrum);
    let j1 = opts.start_index;
    let l1 = lam(j1)?;
    if l1.is_zero() {
        return Err(DiophantineError::InvalidParams("first eigenvalue is zero".into()));
    }
    let mut kappa = BigRational::new(BigInt::from(opts.start_tau), l1.clone());
    let mut chosen: Vec<(usize, BigInt, f64)> = vec![(j1, l1, log_target_for(j1, root).to_f64().unwrap_or(f64::INFINITY))];
    for level in 2..=levels {
        let prev_j = chosen.last().map(|c| c.0).unwrap_or(0);
        let q = kappa.denom().clone();
        let p = kappa.numer().clone();
        // ln of the admissible |δ| bound: min_i 2^{-(level-i)} e^{-x_i} / λ_i
        let ln_bound = chosen
            .iter()
            .enumerate()
            .map(|(i, (_, l, x))| -((level - 1 - i) as f64) * LN_2 - x - big_ln(&l.abs()) - 1e-9)
            .fold(f64::INFINITY, f64::min);
        let ln_q = big_ln(&q);
        let mut pick: Option<(usize, BigInt, BigInt)> = None;
        // |δ| >= 1/(qλ) forces λ >= exp(-ln_bound - ln q)
        let ln_lambda_min = -ln_bound - ln_q;
        if ln_lambda_min < (opts.cap as f64 * 4.0).ln() + 60.0 {
            let start = first_index_with_lambda(eigs, prev_j + 1, opts.cap, ln_lambda_min);
            for j in start..=opts.cap {
                let l = lam(j)?;
                let num = &p * &l;
                let r = num.mod_floor(&q);
                let two_r = &r * 2;
                let delta_num = if two_r <= q { -r.clone() } else { &q - &r };
                if delta_num.is_zero() {
                    continue;
                }
                // |δ| = |delta_num| / (qλ) <= bound
                if big_ln(&delta_num.abs()) - ln_q - big_ln(&l.abs()) <= ln_bound {
                    pick = Some((j, l, delta_num));
                    break;
                }
            }
        }
        let (j, l, delta) = match pick {
            Some((j, l, delta_num)) => {
                let delta = BigRational::new(delta_num, &q * &l);
                (j, l, delta)
            }
            None => {
                let mut hit = None;
                for j in prev_j + 1..=opts.cap {
                    let l = lam(j)?;
                    if (&l).mod_floor(&q).is_zero() {
                        hit = Some((j, l));
                        break;
                    }
                }
                let (j, l) = hit.ok_or(DiophantineError::LevelOverflow { level, cap: opts.cap })?;
                (j, l, BigRational::zero())
            }
        };
        kappa += delta;
        chosen.push((j, l, log_target_for(j, root).to_f64().unwrap_or(f64::INFINITY)));
    }
    let levels = chosen
        .into_iter()
        .map(|(j, l, _)| {
            let prod = &kappa * BigRational::from_integer(l.clone());
            let tau = prod.round().to_integer();
            let gap = (BigRational::from_integer(tau.clone()) - prod).abs();
            LiouvilleLevel { j, lambda: l, tau, gap, log_target: log_target_for(j, root) }
        })
        .collect();
    let cert = LiouvilleCertificate { kappa, root, levels };
    cert.verify()?;
    Ok(cert)
}

/// Smallest `j` in `[from, cap]` with `ln|λ_j| >= ln_min` (binary search on
/// the monotone closed-form sequence).
fn first_index_with_lambda(eigs: &EigenSequence, from: usize, cap: usize, ln_min: f64) -> usize {
    let ok = |j: usize| eigs.lambda_at(j).map(|l| l.abs().ln() >= ln_min).unwrap_or(true);
    if ok(from) {
        return from;
    }
    let (mut lo, mut hi) = (from, cap.max(from));
    if !ok(hi) {
        return hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
