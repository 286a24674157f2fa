use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::{CliError, EXIT_OK, EXIT_RESONANCE};
use crate::classifier::{build_witness, classify, classify_constant, Decision, Verdict};
use crate::diagnostics::{fit_decay, pm_seminorms};
use crate::diophantine::{
    classify_rational_exact, construct_liouville, liouville_fit, parse_rational, Alpha, ConstructOptions,
    DistanceSequence, LiouvilleCertificate,
};
use crate::error::{DiagnosticsError, DiophantineError, SolverError};
use crate::formula::parse_formula;
use crate::solver::{divisor_report, solve_field, DivisorReport, ModeField, SolveOptions};
use crate::spectrum::EigenSequence;
use crate::torus::TorusFunction;
use crate::witness::WitnessBundle;

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json(out: &Path, name: &str, v: &Value) -> Result<(), CliError> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| CliError::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

fn forcing(cfg: &ExperimentConfig, eigs: &Arc<EigenSequence>) -> Result<ModeField, CliError> {
    let spec = cfg
        .f
        .as_ref()
        .ok_or_else(|| CliError::Config("solve needs a right-hand side: set 'f' in the config or pass --f".into()))?;
    let profile = parse_formula(&spec.formula)
        .map_err(|e| CliError::Config(format!("f: {e}")))?
        .to_torus(cfg.grid)
        .map_err(|e| CliError::Config(format!("f: {e}")))?;
    let exponent = spec.exponent.unwrap_or(cfg.params()?.exponent());
    if let Some(bad) = spec.modes.iter().flatten().find(|&&j| j >= eigs.len()) {
        return Err(CliError::Config(format!("f mode {bad} is outside the {} available modes", eigs.len())));
    }
    let entries = (0..eigs.len())
        .map(|j| {
            let active = spec.modes.as_ref().is_none_or(|m| m.contains(&j));
            active.then(|| {
                let w = (-spec.decay * ((j + 1) as f64).powf(exponent)).exp();
                profile.scale(Complex64::new(w, 0.0))
            })
        })
        .collect();
    ModeField::from_entries(eigs.clone(), entries).map_err(|e| CliError::Config(e.to_string()))
}

fn summary(cfg: &ExperimentConfig, c: &TorusFunction, report: &DivisorReport) -> Value {
    let c0 = c.mean();
    let pick = |f: fn(&crate::solver::DivisorRow) -> bool| -> Vec<usize> {
        report.rows.iter().filter(|r| f(r)).map(|r| r.j).collect()
    };
    json!({
        "modes": report.rows.len(),
        "grid": cfg.grid,
        "c0": [c0.re, c0.im],
        "resonant": report.resonant_indices(),
        "ill_conditioned": pick(|r| r.ill_conditioned && !r.resonant),
        "clamped": pick(|r| r.clamped),
        "solved": pick(|r| r.residual.is_some()),
        "max_residual": report.max_residual(),
        "residuals_ok": report.residuals_ok(),
    })
}

/// `u.csv`, `divisors.csv` and `summary.json`; exit 2 when any mode resonates.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path) -> Result<i32, CliError> {
    let eigs = Arc::new(cfg.eigs()?);
    let c = cfg.coefficient()?;
    let f = forcing(cfg, &eigs)?;
    let opts = SolveOptions::default();
    let (u, report) = match solve_field(&c, &f, &opts) {
        Ok(r) => (Some(r.0), r.1),
        Err(SolverError::AllResonant) => (None, divisor_report(c.mean(), &eigs, eigs.len(), &opts)),
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    let mut w = create(out, "u.csv")?;
    match &u {
        Some(u) => u.write_csv(&mut w).map_err(csv_err)?,
        None => writeln!(w, "j,i,t,re,im")?,
    }
    w.flush()?;
    let mut w = create(out, "divisors.csv")?;
    report.write_csv(&mut w).map_err(csv_err)?;
    w.flush()?;
    let s = summary(cfg, &c, &report);
    write_json(out, "summary.json", &s)?;
    let resonant = report.resonant_indices();
    println!(
        "solve: {} modes, {} resonant, max residual {:e}",
        report.rows.len(),
        resonant.len(),
        report.max_residual()
    );
    Ok(if resonant.is_empty() { EXIT_OK } else { EXIT_RESONANCE })
}

fn emit_witness(cfg: &ExperimentConfig, out: &Path, bundle: &WitnessBundle, samples: bool) -> Result<Value, CliError> {
    let manifest = bundle.manifest(cfg.params()?.exponent());
    write_json(out, "witness.json", &manifest)?;
    let mut w = create(out, "witness_table.csv")?;
    bundle.write_table_csv(&mut w).map_err(csv_err)?;
    w.flush()?;
    if samples {
        let mut w = create(out, "witness_modes.csv")?;
        bundle.write_modes_csv(&mut w).map_err(csv_err)?;
        w.flush()?;
    }
    Ok(manifest)
}

fn certificate(cfg: &ExperimentConfig, eigs: &EigenSequence, levels: usize) -> Result<LiouvilleCertificate, CliError> {
    construct_liouville(eigs, cfg.mu, levels, &ConstructOptions::default()).map_err(|e| CliError::Config(e.to_string()))
}

/// `verdict.json`; with `witness` set and a notGH verdict, also the witness files.
pub fn cmd_classify(cfg: &ExperimentConfig, out: &Path) -> Result<i32, CliError> {
    let eigs = cfg.eigs()?;
    let c = cfg.coefficient()?;
    let verdict = classify(&c, &eigs, cfg.mu);
    write_json(out, "verdict.json", &verdict.to_json())?;
    println!("{}", json!({"decision": verdict.decision, "branch": verdict.branch}));
    if cfg.witness && verdict.decision == Decision::NotGh {
        if verdict.witness.is_none() {
            eprintln!("hypotorus: heuristic notGH verdict carries no witness");
        } else {
            let bundle = build_witness(&verdict, &c, None, &eigs, cfg.levels).map_err(|e| CliError::Config(e.to_string()))?;
            emit_witness(cfg, out, &bundle, cfg.samples)?;
        }
    }
    Ok(EXIT_OK)
}

/// Builds and verifies the witness for `c`, or for a certified Liouville
/// constant when `construct` is set; prints the manifest.
pub fn cmd_witness(cfg: &ExperimentConfig, out: &Path) -> Result<i32, CliError> {
    let eigs = cfg.eigs()?;
    let (verdict, c, alpha): (Verdict, TorusFunction, Option<Alpha>) = match cfg.construct {
        Some(levels) => {
            let cert = certificate(cfg, &eigs, levels)?;
            let c = TorusFunction::constant(cfg.grid, Complex64::new(cert.kappa_f64(), 0.0))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let alpha = Alpha::Certified(cert);
            (classify_constant(&alpha, 0.0, &eigs, cfg.mu), c, Some(alpha))
        }
        None => {
            let c = cfg.coefficient()?;
            (classify(&c, &eigs, cfg.mu), c, None)
        }
    };
    write_json(out, "verdict.json", &verdict.to_json())?;
    if verdict.decision != Decision::NotGh || verdict.witness.is_none() {
        return Err(CliError::Config(format!(
            "no witness: verdict is {} ({})",
            json!(verdict.decision),
            json!(verdict.branch)
        )));
    }
    let levels = match cfg.construct {
        Some(l) => l,
        None => cfg.levels,
    };
    let bundle = build_witness(&verdict, &c, alpha.as_ref(), &eigs, levels).map_err(|e| CliError::Config(e.to_string()))?;
    let manifest = emit_witness(cfg, out, &bundle, cfg.samples)?;
    println!("{}", serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?);
    Ok(EXIT_OK)
}

fn distance_report(seq: &DistanceSequence, kappa: Option<&num_rational::BigRational>, eigs: &EigenSequence) -> (Value, bool) {
    let exact = kappa.map(|k| match classify_rational_exact(k, eigs) {
        Ok(v) => json!(v),
        Err(e) => json!({"error": e.to_string()}),
    });
    match liouville_fit(seq) {
        Ok(fit) => (json!({"kappa": kappa.map(|k| k.to_string()), "exact": exact, "fit": fit}), false),
        Err(e) => {
            let resonant = matches!(e, DiophantineError::MostlyResonant { .. });
            let zeros = seq.distances().iter().filter(|d| **d == 0.0).count();
            (
                json!({"kappa": kappa.map(|k| k.to_string()), "exact": exact, "fit": Value::Null, "error": e.to_string(), "zero_distances": zeros}),
                resonant,
            )
        }
    }
}

/// `distances.csv` and `fit.json` for `κ`; with `construct`, `certificate.json`
/// (and the distance files of the certified `κ` when no `κ` is given).
pub fn cmd_diophantine(cfg: &ExperimentConfig, out: &Path) -> Result<i32, CliError> {
    if cfg.kappa.is_none() && cfg.construct.is_none() {
        return Err(CliError::Config("diophantine needs 'kappa' or 'construct'".into()));
    }
    let eigs = cfg.eigs()?;
    let mut kappa = match &cfg.kappa {
        Some(s) => Some(parse_rational(s).map_err(|e| CliError::Config(e.to_string()))?),
        None => None,
    };
    if let Some(levels) = cfg.construct {
        let cert = certificate(cfg, &eigs, levels)?;
        let mut doc = cert.to_json();
        doc["verified"] = json!(cert.verify().is_ok());
        write_json(out, "certificate.json", &doc)?;
        println!("certificate: {} levels, verified = {}", cert.levels.len(), cert.verify().is_ok());
        kappa.get_or_insert(cert.kappa.clone());
    }
    let kappa = kappa.expect("kappa or construct present");
    let seq = DistanceSequence::from_rational(&kappa, &eigs, cfg.mu).map_err(|e| CliError::Config(e.to_string()))?;
    let mut w = create(out, "distances.csv")?;
    seq.write_csv(&mut w).map_err(csv_err)?;
    w.flush()?;
    let (report, resonant) = distance_report(&seq, Some(&kappa), &eigs);
    write_json(out, "fit.json", &report)?;
    Ok(if resonant { EXIT_RESONANCE } else { EXIT_OK })
}

/// `decay.json` and `pm.csv` for a field written by `solve`.
pub fn cmd_decay(cfg: &ExperimentConfig, out: &Path) -> Result<i32, CliError> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Config("decay needs 'input': a field CSV written by solve".into()))?;
    let file = File::open(cfg.resolve(path)).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    let eigs = Arc::new(cfg.eigs()?);
    let field = ModeField::read_csv(file, eigs).map_err(|e| match e {
        SolverError::EmptyField => CliError::Degenerate(format!("{path}: field is empty")),
        e => CliError::Config(format!("{path}: {e}")),
    })?;
    let params = cfg.params()?;
    let fit = fit_decay(&field, &params, cfg.k_max).map_err(|e| match e {
        DiagnosticsError::DegenerateData | DiagnosticsError::TooFewModes { .. } => CliError::Degenerate(e.to_string()),
        e => CliError::Config(e.to_string()),
    })?;
    let pm = pm_seminorms(&field, cfg.m_max, cfg.k_max);
    let mut w = create(out, "pm.csv")?;
    pm.write_csv(&mut w).map_err(csv_err)?;
    w.flush()?;
    let doc = json!({
        "params": params,
        "fit": fit,
        "pm_m_slope": pm.m_slope,
        "pm_k_slope": pm.k_slope,
        "pm_slope_limit": params.m as f64 * params.mu + 0.2,
    });
    write_json(out, "decay.json", &doc)?;
    println!("decay: epsilon = {}, r2 = {}, trivial = {}", json!(fit.epsilon), json!(fit.r2), fit.trivial);
    Ok(EXIT_OK)
}
