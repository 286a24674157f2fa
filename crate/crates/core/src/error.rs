//! Error types for every layer of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("grid size {0} is not a power of two >= 4")]
    BadGridSize(usize),
    #[error("grid size mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },
    #[error("malformed csv: {0}")]
    Csv(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),
    #[error("eigenvalue table is not sorted by modulus at index {0}")]
    UnsortedTable(usize),
    #[error("eigenvalue table does not diverge")]
    NonDivergentTable,
    #[error("quadrature size {q} is too small for {modes} modes (need q >= 2 * modes)")]
    QuadratureTooSmall { modes: usize, q: usize },
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed csv: {0}")]
    Csv(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("mode with lambda = {lambda} is resonant (divisor {divisor:e})")]
    ResonantMode { lambda: f64, divisor: f64 },
    #[error("every mode is resonant")]
    AllResonant,
    #[error("field is empty")]
    EmptyField,
    #[error("exponent clamp engaged for lambda = {lambda}")]
    ExponentClamped { lambda: f64 },
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error("field has {modes} modes but the spectrum only {available}")]
    SpectrumTooShort { modes: usize, available: usize },
    #[error("malformed csv: {0}")]
    Csv(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiophantineError {
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("eigenvalues must be integers for exact arithmetic")]
    NonIntegerSpectrum,
    #[error("need at least {needed} distances, got {got}")]
    TooFewModes { needed: usize, got: usize },
    #[error("{zeros} of {total} distances vanish; use the exact rational classifier")]
    MostlyResonant { zeros: usize, total: usize },
    #[error("level {level} needs an index beyond the cap {cap}")]
    LevelOverflow { level: usize, cap: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("certificate failed exact verification at level {0}")]
    CertificationFailed(usize),
    #[error("cannot parse rational '{0}'")]
    BadRational(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("imaginary part of Im c samples reaches {0:e}")]
    NonRealInput(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("invalid bump: {0}")]
    InvalidBump(String),
    #[error("alpha is neither an integer nor backed by a certificate")]
    NoCertificate,
    #[error("no partition with positive margin at this grid resolution")]
    PartitionNotFound,
    #[error("no (+, 0, -) plateau pattern in Im c")]
    PatternNotFound,
    #[error("bump has zero integral")]
    DegenerateBump,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("all coefficients are below the floor")]
    DegenerateData,
    #[error("need at least {needed} modes, got {got}")]
    TooFewModes { needed: usize, got: usize },
    #[error("x-side seminorms need a one-dimensional model (n = {0})")]
    DimensionUnsupported(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("fit unavailable: {0}")]
    FitUnavailable(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("formula error at byte {position}: {message}")]
pub struct FormulaError {
    pub position: usize,
    pub message: String,
}

/// Umbrella error for callers that mix several layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diophantine(#[from] DiophantineError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}
