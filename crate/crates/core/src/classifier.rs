//! Decision procedure for global hypoellipticity of `D_t + c(t)P`.
//!
//! The tree: a one-signed, nonvanishing `Im c` gives GH; a change of sign
//! gives notGH with a witness; `Im c ≡ 0` reduces to the constant `a_0`,
//! which is decided exactly when rational and by a decay fit otherwise.

use num_complex::Complex64;
use serde::Serialize;

use crate::diophantine::{
    classify_rational_exact, liouville_fit, Alpha, DistanceSequence, LiouvilleClass, LiouvilleFit, RationalVerdict,
};
use crate::error::{ClassifierError, WitnessError};
use crate::spectrum::{EigenSequence, ModelKind};
use crate::torus::TorusFunction;
use crate::witness::{
    constant_witness, default_reduction_bump, dominant_orientation, find_partition, l0_reduction_witness,
    plateau_witness, sign_change_witness, sign_transitions, Pattern, WitnessBundle, DEFAULT_GRID, DEFAULT_SIGMA,
    PLATEAU_FRACTION, TOL_SIGN,
};

/// Modes used for the Diophantine fit when the caller's sequence is shorter.
const FIT_MODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignReport {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `2π ×` fraction of samples with `|b| < TOL_SIGN`.
    pub zero_measure: f64,
    pub longest_zero_run: usize,
    pub changes_sign: bool,
    pub identically_zero: bool,
}

pub fn sign_report(b: &TorusFunction) -> Result<SignReport, ClassifierError> {
    let im = b.max_imag();
    if im >= 1e-12 {
        return Err(ClassifierError::NonRealInput(im));
    }
    let vals: Vec<f64> = b.samples().iter().map(|z| z.re).collect();
    Ok(report_of(&vals))
}

fn report_of(vals: &[f64]) -> SignReport {
    let n = vals.len();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = vals.iter().sum::<f64>() / n as f64;
    let zero = |v: f64| v.abs() < TOL_SIGN;
    let zeros = vals.iter().filter(|v| zero(**v)).count();
    let longest_zero_run = if zeros == n {
        n
    } else {
        let start = (0..n).find(|&i| !zero(vals[i])).unwrap_or(0);
        let (mut best, mut run) = (0, 0);
        for k in 1..=n {
            if zero(vals[(start + k) % n]) {
                run += 1;
                best = usize::max(best, run);
            } else {
                run = 0;
            }
        }
        best
    };
    let sup = min.abs().max(max.abs());
    SignReport {
        min,
        max,
        mean,
        zero_measure: 2.0 * std::f64::consts::PI * zeros as f64 / n as f64,
        longest_zero_run,
        changes_sign: min < -TOL_SIGN && max > TOL_SIGN,
        identically_zero: sup < TOL_SIGN,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    #[serde(rename = "GH")]
    Gh,
    #[serde(rename = "notGH")]
    NotGh,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

/// Which clause of the characterization decided the verdict. The serialized
/// names are the labels of the corresponding results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `Im c` one-signed and not identically zero.
    #[serde(rename = "thm-3.10-sign")]
    SignDefinite,
    /// Constant coefficient with `β ≠ 0`.
    #[serde(rename = "thm-3.6a-imaginary")]
    ImaginaryPart,
    /// `Im c ≡ 0`; decided by the Diophantine type of `a_0`.
    #[serde(rename = "thm-3.6b-diophantine")]
    Diophantine,
    /// `λ_j c_0 ∈ Z` for infinitely many `j`.
    #[serde(rename = "prop-3.9-resonance")]
    Resonance,
    /// Transversal change of sign of `Im c`.
    #[serde(rename = "thm-3.15-sign-change")]
    SignChange,
    /// Change of sign across a plateau where `Im c` vanishes.
    #[serde(rename = "remark-3.15-plateau")]
    Plateau,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Definitive,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessRoute {
    Constant,
    SignChange,
    Plateau,
    L0Reduction,
}

/// Enough information to rebuild the witness for a notGH verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessHandle {
    pub route: WitnessRoute,
    pub anchor: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Evidence {
    pub sign: Option<SignReport>,
    pub a0: Option<f64>,
    pub b0: Option<f64>,
    pub rational: Option<RationalVerdict>,
    pub fit: Option<LiouvilleFit>,
    pub resonant_sample: Vec<usize>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub decision: Decision,
    pub branch: Branch,
    pub confidence: Confidence,
    pub evidence: Evidence,
    pub witness: Option<WitnessHandle>,
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Indices `j < J` with `|Im(λ_j c0)| < tol` and `dist(Re(λ_j c0), Z) < tol`.
pub fn resonant_set(c0: Complex64, eigs: &EigenSequence, tol: f64) -> Vec<usize> {
    eigs.lambdas()
        .iter()
        .enumerate()
        .filter(|(_, &l)| (l * c0.im).abs() < tol && crate::diophantine::dist_to_int(l * c0.re) < tol)
        .map(|(j, _)| j)
        .collect()
}

fn fit_sequence(eigs: &EigenSequence) -> Option<EigenSequence> {
    if eigs.len() >= 64 {
        return Some(eigs.clone());
    }
    match eigs.kind() {
        ModelKind::Table { .. } => None,
        _ => eigs.with_modes(FIT_MODES).ok(),
    }
}

/// Verdict for the constant coefficient `c = α + iβ`.
pub fn classify_constant(alpha: &Alpha, beta: f64, eigs: &EigenSequence, mu: f64) -> Verdict {
    let evidence = Evidence { a0: Some(alpha.to_f64()), b0: Some(beta), ..Evidence::default() };
    if beta != 0.0 {
        return Verdict {
            decision: Decision::Gh,
            branch: Branch::ImaginaryPart,
            confidence: Confidence::Definitive,
            evidence,
            witness: None,
        };
    }
    decide_real_mean(alpha, eigs, mu, evidence, WitnessRoute::Constant)
}

/// Shared tail of the constant case and the `Im c ≡ 0` reduction.
fn decide_real_mean(alpha: &Alpha, eigs: &EigenSequence, mu: f64, mut evidence: Evidence, route: WitnessRoute) -> Verdict {
    let handle = |route| Some(WitnessHandle { route, anchor: Some(0.0), interval: None, margin: None });
    if let Alpha::Certified(cert) = alpha {
        if cert.verify().is_ok() {
            evidence.reason = Some(format!("verified certificate with {} levels", cert.levels.len()));
            return Verdict {
                decision: Decision::NotGh,
                branch: Branch::Diophantine,
                confidence: Confidence::Definitive,
                evidence,
                witness: handle(route),
            };
        }
        evidence.reason = Some("certificate failed verification; falling back to its value".into());
    }
    if let Some(kappa) = alpha.exact() {
        match classify_rational_exact(&kappa, eigs) {
            Ok(rv) => {
                let resonant = rv.resonant;
                let definitive = rv.definitive;
                evidence.resonant_sample = rv.resonant_sample.clone();
                evidence.rational = Some(rv);
                let confidence = if definitive { Confidence::Definitive } else { Confidence::Heuristic };
                return if resonant {
                    Verdict { decision: Decision::NotGh, branch: Branch::Resonance, confidence, evidence, witness: handle(route) }
                } else {
                    Verdict { decision: Decision::Gh, branch: Branch::Diophantine, confidence, evidence, witness: None }
                };
            }
            Err(e) => evidence.reason = Some(e.to_string()),
        }
    }
    let Some(seq) = fit_sequence(eigs) else {
        evidence.reason = Some("spectrum too short for a Diophantine fit".into());
        return inconclusive(evidence);
    };
    let dist = DistanceSequence::from_float(alpha.to_f64(), &seq, mu);
    match liouville_fit(&dist) {
        Ok(fit) => {
            evidence.resonant_sample = fit.resonant.iter().copied().take(32).collect();
            let recurring = fit.resonant.len() >= 2;
            let class = fit.classification;
            evidence.fit = Some(fit);
            match class {
                LiouvilleClass::LiouvilleSuspected if recurring => Verdict {
                    decision: Decision::NotGh,
                    branch: Branch::Resonance,
                    confidence: Confidence::Definitive,
                    evidence,
                    witness: None,
                },
                LiouvilleClass::LiouvilleSuspected => Verdict {
                    decision: Decision::NotGh,
                    branch: Branch::Diophantine,
                    confidence: Confidence::Heuristic,
                    evidence,
                    witness: None,
                },
                LiouvilleClass::NonLiouvilleEvidence => Verdict {
                    decision: Decision::Gh,
                    branch: Branch::Diophantine,
                    confidence: Confidence::Heuristic,
                    evidence,
                    witness: None,
                },
                LiouvilleClass::Undetermined => {
                    evidence.reason = Some("distance decay between the evidence and suspicion thresholds".into());
                    inconclusive(evidence)
                }
            }
        }
        Err(e) => {
            let resonant = matches!(e, crate::error::DiophantineError::MostlyResonant { .. });
            evidence.reason = Some(e.to_string());
            if resonant {
                evidence.resonant_sample = dist.distances().iter().enumerate().filter(|(_, d)| **d == 0.0).map(|(j, _)| j).take(32).collect();
                Verdict { decision: Decision::NotGh, branch: Branch::Resonance, confidence: Confidence::Definitive, evidence, witness: None }
            } else {
                inconclusive(evidence)
            }
        }
    }
}

fn inconclusive(evidence: Evidence) -> Verdict {
    Verdict { decision: Decision::Inconclusive, branch: Branch::Inconclusive, confidence: Confidence::Heuristic, evidence, witness: None }
}

/// Verdict for a variable coefficient `c(t)` sampled on its grid.
pub fn classify(c: &TorusFunction, eigs: &EigenSequence, mu: f64) -> Verdict {
    let parts = c.decompose_mean();
    let b: Vec<f64> = c.samples().iter().map(|z| z.im).collect();
    let sign = report_of(&b);
    let mut evidence = Evidence { sign: Some(sign), a0: Some(parts.a0), b0: Some(parts.b0), ..Evidence::default() };
    if sign.identically_zero {
        let real_constant = c.samples().iter().all(|z| (z.re - parts.a0).abs() < TOL_SIGN);
        let route = if real_constant { WitnessRoute::Constant } else { WitnessRoute::L0Reduction };
        return decide_real_mean(&Alpha::Float(parts.a0), eigs, mu, evidence, route);
    }
    if !sign.changes_sign {
        return Verdict {
            decision: Decision::Gh,
            branch: Branch::SignDefinite,
            confidence: Confidence::Definitive,
            evidence,
            witness: None,
        };
    }
    evidence.resonant_sample = resonant_set(parts.c0, eigs, 1e-12).into_iter().take(32).collect();
    let s = dominant_orientation(eigs);
    let oriented: Vec<f64> = b.iter().map(|v| s * v).collect();
    let long = c.len() / PLATEAU_FRACTION;
    let downs: Vec<_> = sign_transitions(&oriented, TOL_SIGN).into_iter().filter(|t| t.from_positive).collect();
    let fine = if c.len() < 512 { c.resample(512).ok() } else { None };
    let grid = fine.as_ref().unwrap_or(c);
    if downs.iter().any(|t| t.zero_run <= long) {
        match find_partition(grid, s, Pattern::Transversal, None) {
            Ok(p) => {
                return Verdict {
                    decision: Decision::NotGh,
                    branch: Branch::SignChange,
                    confidence: Confidence::Definitive,
                    evidence,
                    witness: Some(WitnessHandle {
                        route: WitnessRoute::SignChange,
                        anchor: Some(p.anchor),
                        interval: Some(p.support_times()),
                        margin: Some(p.margin),
                    }),
                }
            }
            Err(e) => evidence.reason = Some(e.to_string()),
        }
    }
    if downs.iter().any(|t| t.zero_run > long) {
        match find_partition(grid, s, Pattern::Plateau, None) {
            Ok(p) => {
                let (lo, hi) = p.top;
                let h = 2.0 * std::f64::consts::PI / grid.len() as f64;
                return Verdict {
                    decision: Decision::NotGh,
                    branch: Branch::Plateau,
                    confidence: Confidence::Definitive,
                    evidence,
                    witness: Some(WitnessHandle {
                        route: WitnessRoute::Plateau,
                        anchor: Some(p.anchor),
                        interval: Some((lo as f64 * h, hi as f64 * h)),
                        margin: Some(p.margin),
                    }),
                };
            }
            Err(e) => evidence.reason = Some(e.to_string()),
        }
    }
    if evidence.reason.is_none() {
        evidence.reason = Some("sign change without a usable partition at this grid resolution".into());
    }
    inconclusive(evidence)
}

/// Builds the witness behind a notGH verdict for `c`. `alpha` overrides the
/// mean of `Re c` (for example with a certificate); `levels` bounds the
/// number of modes for the constant and reduction routes.
pub fn build_witness(
    verdict: &Verdict,
    c: &TorusFunction,
    alpha: Option<&Alpha>,
    eigs: &EigenSequence,
    levels: usize,
) -> Result<WitnessBundle, WitnessError> {
    let handle = verdict.witness.as_ref().ok_or_else(|| WitnessError::InvalidInput("verdict carries no witness".into()))?;
    let fallback = Alpha::Float(c.decompose_mean().a0);
    let alpha = alpha.unwrap_or(&fallback);
    match handle.route {
        WitnessRoute::Constant => constant_witness(alpha, eigs, levels),
        WitnessRoute::L0Reduction => {
            let phi = default_reduction_bump(DEFAULT_GRID)?;
            l0_reduction_witness(c, alpha, &phi, eigs, levels)
        }
        WitnessRoute::SignChange => sign_change_witness(c, eigs, DEFAULT_GRID, DEFAULT_SIGMA),
        WitnessRoute::Plateau => plateau_witness(c, handle.interval, eigs, DEFAULT_GRID, DEFAULT_SIGMA),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn h1(n: usize) -> EigenSequence {
        EigenSequence::build(ModelKind::Harmonic1d, n).unwrap()
    }

    fn c_of(f: impl Fn(f64) -> Complex64) -> TorusFunction {
        TorusFunction::from_fn(256, f).unwrap()
    }

    #[test]
    fn sign_examples() {
        let r = sign_report(&c_of(|t| Complex64::new(t.sin(), 0.0))).unwrap();
        assert!(r.changes_sign && !r.identically_zero);
        let r = sign_report(&c_of(|t| Complex64::new(1.0 - t.cos(), 0.0))).unwrap();
        assert!(!r.changes_sign && !r.identically_zero);
        assert_eq!(r.min, 0.0);
        assert!((r.max - 2.0).abs() < 1e-12);
        assert!(sign_report(&TorusFunction::zeros(64).unwrap()).unwrap().identically_zero);
        assert!(sign_report(&c_of(|t| Complex64::new(0.0, t.sin()))).is_err());
    }

    #[test]
    fn constant_examples() {
        let e = h1(64);
        let v = classify_constant(&Alpha::Float(0.7), 1.0, &e, 0.5);
        assert_eq!((v.decision, v.branch), (Decision::Gh, Branch::ImaginaryPart));
        let v = classify_constant(&Alpha::Float(1.0), 0.0, &e, 0.5);
        assert_eq!(v.decision, Decision::NotGh);
        assert_eq!(v.evidence.resonant_sample, (0..32).collect::<Vec<_>>());
        let v = classify_constant(&Alpha::Rational(BigRational::new(BigInt::from(1), BigInt::from(2))), 0.0, &e, 0.5);
        assert_eq!((v.decision, v.confidence), (Decision::Gh, Confidence::Definitive));
        assert_eq!(v.evidence.rational.unwrap().floor, Some((1, 2)));
        let v = classify_constant(&Alpha::Float(2f64.sqrt() - 1.0), 0.0, &e, 0.5);
        assert_eq!((v.decision, v.confidence), (Decision::Gh, Confidence::Heuristic));
    }

    #[test]
    fn variable_examples() {
        let e = h1(64);
        let v = classify(&c_of(|t| Complex64::new(0.0, 1.0 - t.cos())), &e, 0.5);
        assert_eq!((v.decision, v.branch), (Decision::Gh, Branch::SignDefinite));
        let v = classify(&c_of(|t| Complex64::new(0.5, t.sin())), &e, 0.5);
        assert_eq!((v.decision, v.branch), (Decision::NotGh, Branch::SignChange));
        assert!(v.witness.is_some());
        let v = classify(&c_of(|t| Complex64::new(t.sin(), 0.0)), &e, 0.5);
        assert_eq!((v.decision, v.branch), (Decision::NotGh, Branch::Resonance));
        let v = classify(&c_of(|_| Complex64::new(1.0, 0.0)), &e, 0.5);
        assert_eq!((v.decision, v.branch), (Decision::NotGh, Branch::Resonance));
        let json = v.to_json();
        assert_eq!(json["decision"], "notGH");
        assert_eq!(json["branch"], "prop-3.9-resonance");
    }

    #[test]
    fn resonant_set_examples() {
        let e = h1(10);
        assert_eq!(resonant_set(Complex64::new(1.0, 0.0), &e, 1e-12), (0..10).collect::<Vec<_>>());
        assert!(resonant_set(Complex64::new(0.5, 0.0), &e, 1e-12).is_empty());
        assert!(resonant_set(Complex64::new(0.0, 1.0), &e, 1e-12).is_empty());
    }
}
