use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

use ::hypotorus::classifier::{self, build_witness, Decision};
use ::hypotorus::cli::parse_model;
use ::hypotorus::diagnostics::{self, GSParams};
use ::hypotorus::diophantine::{self, parse_rational, Alpha, ConstructOptions};
use ::hypotorus::formula::parse_formula;
use ::hypotorus::solver::{self, ModeField, SolveOptions};
use ::hypotorus::{EigenSequence, TorusFunction};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn alpha_of(value: &Bound<'_, PyAny>) -> PyResult<Alpha> {
    if let Ok(s) = value.extract::<String>() {
        return parse_rational(&s).map(Alpha::Rational).map_err(err);
    }
    Ok(Alpha::Float(value.extract::<f64>()?))
}

/// Complex function on the circle, sampled at `2πi/n`.
#[pyclass(name = "Torus", module = "hypotorus", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTorus {
    inner: TorusFunction,
}

#[pymethods]
impl PyTorus {
    /// Samples a trigonometric formula such as `"1/2 + i sin t"` on `n` points.
    #[staticmethod]
    fn formula(text: &str, n: usize) -> PyResult<Self> {
        let poly = parse_formula(text).map_err(err)?;
        Ok(Self { inner: poly.to_torus(n).map_err(err)? })
    }

    #[new]
    fn new(samples: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self { inner: TorusFunction::from_samples(samples).map_err(err)? })
    }

    fn samples(&self) -> Vec<Complex64> {
        self.inner.samples().to_vec()
    }

    fn grid(&self) -> Vec<f64> {
        self.inner.grid()
    }

    fn __call__(&self, t: f64) -> Complex64 {
        self.inner.eval(t)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn mean(&self) -> Complex64 {
        self.inner.mean()
    }

    fn derivative(&self) -> Self {
        Self { inner: self.inner.derivative() }
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn __repr__(&self) -> String {
        format!("Torus(n={}, mean={})", self.inner.len(), self.inner.mean())
    }
}

/// Eigenvalues `λ_j` of the model operator.
#[pyclass(name = "Spectrum", module = "hypotorus", frozen, skip_from_py_object)]
struct PySpectrum {
    inner: Arc<EigenSequence>,
}

#[pymethods]
impl PySpectrum {
    /// `model` is `harmonic1d`, `harmonic1d-power:K` or `harmonic-nd:N`.
    #[new]
    #[pyo3(signature = (model = "harmonic1d", modes = 64))]
    fn new(model: &str, modes: usize) -> PyResult<Self> {
        let kind = parse_model(model).map_err(err)?;
        Ok(Self { inner: Arc::new(EigenSequence::build(kind, modes).map_err(err)?) })
    }

    /// Spectrum read from explicit values, with order `m` and dimension `n`.
    #[staticmethod]
    #[pyo3(signature = (values, m = 2, n = 1))]
    fn table(values: Vec<f64>, m: u32, n: u32) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(EigenSequence::from_table(values, m, n).map_err(err)?) })
    }

    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn order(&self) -> u32 {
        self.inner.order()
    }

    #[getter]
    fn dimension(&self) -> u32 {
        self.inner.dimension()
    }
}

/// One periodic function per mode; unsolved modes are `None`.
#[pyclass(name = "Field", module = "hypotorus", frozen, skip_from_py_object)]
struct PyField {
    inner: ModeField,
}

#[pymethods]
impl PyField {
    /// `f_j = amplitudes[j]·profile` (every amplitude 1 when omitted).
    #[new]
    #[pyo3(signature = (spectrum, profile, amplitudes = None))]
    fn new(spectrum: &PySpectrum, profile: &PyTorus, amplitudes: Option<Vec<Complex64>>) -> PyResult<Self> {
        let modes = amplitudes.as_ref().map_or(spectrum.inner.len(), Vec::len);
        if modes > spectrum.inner.len() {
            return Err(PyValueError::new_err("more amplitudes than eigenvalues"));
        }
        let entries = (0..modes)
            .map(|j| {
                let a = amplitudes.as_ref().map_or(Complex64::new(1.0, 0.0), |v| v[j]);
                TorusFunction::from_samples(profile.inner.samples().iter().map(|z| a * z).collect()).map_err(err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: ModeField::new(spectrum.inner.clone(), entries).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.modes()
    }

    fn __getitem__(&self, j: usize) -> PyResult<Option<PyTorus>> {
        if j >= self.inner.modes() {
            return Err(PyIndexError::new_err(j));
        }
        Ok(self.inner.get(j).map(|u| PyTorus { inner: u.clone() }))
    }

    fn sup_norms(&self) -> Vec<Option<f64>> {
        self.inner.sup_norms()
    }
}

/// Solves `∂_t u_j + iλ_j c u_j = f_j`; returns the field and the divisor table.
#[pyfunction]
fn solve<'py>(py: Python<'py>, c: &PyTorus, f: &PyField) -> PyResult<(PyField, Bound<'py, PyAny>)> {
    let (u, report) = solver::solve_field(&c.inner, &f.inner, &SolveOptions::default()).map_err(err)?;
    let report = serde_json::to_value(&report).map_err(err)?;
    Ok((PyField { inner: u }, to_py(py, &report)?))
}

#[pyfunction]
fn apply_operator(c: &PyTorus, u: &PyField) -> PyResult<PyField> {
    Ok(PyField { inner: solver::apply_operator(&c.inner, &u.inner).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (c, spectrum, mu = 0.5))]
fn classify<'py>(py: Python<'py>, c: &PyTorus, spectrum: &PySpectrum, mu: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &classifier::classify(&c.inner, &spectrum.inner, mu).to_json())
}

/// `alpha` is a float or a rational string such as `"3/7"`.
#[pyfunction]
#[pyo3(signature = (alpha, beta, spectrum, mu = 0.5))]
fn classify_constant<'py>(
    py: Python<'py>,
    alpha: &Bound<'py, PyAny>,
    beta: f64,
    spectrum: &PySpectrum,
    mu: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let alpha = alpha_of(alpha)?;
    to_py(py, &classifier::classify_constant(&alpha, beta, &spectrum.inner, mu).to_json())
}

/// Builds and checks a Liouville constant with `levels` certified levels.
#[pyfunction]
#[pyo3(signature = (spectrum, levels, mu = 0.5))]
fn construct_liouville<'py>(py: Python<'py>, spectrum: &PySpectrum, levels: usize, mu: f64) -> PyResult<Bound<'py, PyAny>> {
    let cert = diophantine::construct_liouville(&spectrum.inner, mu, levels, &ConstructOptions::default()).map_err(err)?;
    cert.verify().map_err(err)?;
    to_py(py, &cert.to_json())
}

/// Counterexample manifest for a notGH coefficient.
#[pyfunction]
#[pyo3(signature = (c, spectrum, mu = 0.5, levels = 4))]
fn witness<'py>(py: Python<'py>, c: &PyTorus, spectrum: &PySpectrum, mu: f64, levels: usize) -> PyResult<Bound<'py, PyAny>> {
    let verdict = classifier::classify(&c.inner, &spectrum.inner, mu);
    if verdict.decision != Decision::NotGh || verdict.witness.is_none() {
        return Err(PyValueError::new_err(format!("no witness for verdict {}", verdict.to_json())));
    }
    let bundle = build_witness(&verdict, &c.inner, None, &spectrum.inner, levels).map_err(err)?;
    let params = GSParams::new(mu, 2.0, spectrum.inner.dimension(), spectrum.inner.order()).map_err(err)?;
    to_py(py, &bundle.manifest(params.exponent()))
}

#[pyfunction]
#[pyo3(signature = (u, mu = 0.5, sigma = 2.0, k_max = 8))]
fn fit_decay<'py>(py: Python<'py>, u: &PyField, mu: f64, sigma: f64, k_max: u32) -> PyResult<Bound<'py, PyAny>> {
    let eigs = u.inner.eigs();
    let params = GSParams::new(mu, sigma, eigs.dimension(), eigs.order()).map_err(err)?;
    let fit = diagnostics::fit_decay(&u.inner, &params, k_max).map_err(err)?;
    to_py(py, &serde_json::to_value(&fit).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (u, m_max = 12, k_max = 8))]
fn pm_seminorms<'py>(py: Python<'py>, u: &PyField, m_max: u32, k_max: u32) -> PyResult<Bound<'py, PyAny>> {
    let table = diagnostics::pm_seminorms(&u.inner, m_max, k_max);
    to_py(py, &serde_json::to_value(&table).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (gamma, s, eps, ell_max = 10, j_max = 1_000_000))]
fn lemma25_check<'py>(py: Python<'py>, gamma: f64, s: f64, eps: f64, ell_max: u32, j_max: u64) -> PyResult<Bound<'py, PyAny>> {
    let report = diagnostics::lemma25_check(gamma, s, eps, ell_max, j_max).map_err(err)?;
    to_py(py, &serde_json::to_value(&report).map_err(err)?)
}

/// `(4·dist(x, Z), |e^{2πix} - 1|, 2π·dist(x, Z))`.
#[pyfunction]
fn divisor_sandwich(x: f64) -> (f64, f64, f64) {
    let s = diophantine::divisor_sandwich(x);
    (s.lower, s.value, s.upper)
}

#[pymodule]
#[pyo3(name = "hypotorus")]
pub fn hypotorus_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTorus>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(apply_operator, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(classify_constant, m)?)?;
    m.add_function(wrap_pyfunction!(construct_liouville, m)?)?;
    m.add_function(wrap_pyfunction!(witness, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(pm_seminorms, m)?)?;
    m.add_function(wrap_pyfunction!(lemma25_check, m)?)?;
    m.add_function(wrap_pyfunction!(divisor_sandwich, m)?)?;
    Ok(())
}
