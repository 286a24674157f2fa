use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hypotorus::classifier::{build_witness, classify, classify_constant, Decision};
use hypotorus::diophantine::Alpha;
use hypotorus::{EigenSequence, ModelKind, TorusFunction};

fn harmonic(modes: usize) -> EigenSequence {
    EigenSequence::build(ModelKind::Harmonic1d, modes).unwrap()
}

#[test]
fn constant_coefficients_agree_with_the_constant_classifier() {
    let eigs = harmonic(256);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let alpha = if case % 2 == 0 {
            rng.gen_range(-20i64..20) as f64 / rng.gen_range(1i64..12) as f64
        } else {
            rng.gen_range(-2.0..2.0)
        };
        let beta = if case % 3 == 0 { rng.gen_range(-1.0..1.0) } else { 0.0 };
        let c = TorusFunction::constant(512, Complex64::new(alpha, beta)).unwrap();
        let a = classify(&c, &eigs, 0.5);
        let b = classify_constant(&Alpha::Float(alpha), beta, &eigs, 0.5);
        assert_eq!(a.decision, b.decision, "case {case}: c = {alpha} + {beta}i");
    }
}

#[test]
fn every_not_gh_handle_yields_a_valid_witness() {
    let eigs = harmonic(64);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut built = 0;
    for case in 0..24 {
        let a = rng.gen_range(-1.0..1.0);
        let amp = rng.gen_range(0.2..1.0);
        let k = rng.gen_range(1..4) as f64;
        let phase = rng.gen_range(0.0..2.0 * PI);
        let offset = if case % 2 == 0 { 0.0 } else { rng.gen_range(-0.5..0.5) * amp };
        let c = TorusFunction::from_fn(512, |t| Complex64::new(a, offset + amp * (k * t + phase).sin())).unwrap();
        let verdict = classify(&c, &eigs, 0.5);
        if verdict.decision != Decision::NotGh || verdict.witness.is_none() {
            continue;
        }
        let bundle = build_witness(&verdict, &c, None, &eigs, 4).unwrap();
        assert!(bundle.residuals_ok(), "case {case}");
        built += 1;
    }
    assert!(built >= 12, "only {built} witnesses built");
}

#[test]
fn one_signed_imaginary_part_is_never_not_gh() {
    let eigs = harmonic(64);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let base: f64 = rng.gen_range(0.05..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let wiggle = rng.gen_range(0.0..0.9) * base.abs();
        let c = TorusFunction::from_fn(256, |t| Complex64::new(t.cos(), base + wiggle * (2.0 * t).cos())).unwrap();
        assert_eq!(classify(&c, &eigs, 0.5).decision, Decision::Gh);
    }
}
