use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::diagnostics::GSParams;
use crate::formula::parse_formula;
use crate::spectrum::{EigenSequence, ModelKind};
use crate::torus::TorusFunction;

fn default_mu() -> f64 {
    0.5
}

fn default_sigma() -> f64 {
    2.0
}

fn default_grid() -> usize {
    256
}

fn default_modes() -> usize {
    64
}

fn default_levels() -> usize {
    4
}

fn default_k_max() -> u32 {
    8
}

fn default_m_max() -> u32 {
    12
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Right-hand side `f_j(t) = exp(-decay·(j+1)^e)·φ(t)` on the listed modes
/// (all modes when `modes` is absent); `e` defaults to `1/(2nμ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    pub formula: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<usize>>,
    #[serde(default)]
    pub decay: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

/// One experiment. Relative paths are resolved against `base`, the
/// directory of the config file (or the working directory for flags).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_file: Option<String>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<ForcingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construct: Option<usize>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub witness: bool,
    /// Also write every witness mode sampled on its grid.
    #[serde(default, skip_serializing_if = "is_false")]
    pub samples: bool,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    #[serde(skip)]
    pub base: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Harmonic1d,
            table: None,
            c: None,
            c_file: None,
            mu: default_mu(),
            sigma: default_sigma(),
            grid: default_grid(),
            modes: default_modes(),
            f: None,
            kappa: None,
            construct: None,
            witness: false,
            samples: false,
            levels: default_levels(),
            input: None,
            k_max: default_k_max(),
            m_max: default_m_max(),
            base: PathBuf::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Pretty JSON with a fixed key order and a trailing newline.
    pub fn canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid < 4 || !self.grid.is_power_of_two() {
            return Err(CliError::Config(format!("grid must be a power of two and at least 4, got {}", self.grid)));
        }
        if self.modes == 0 {
            return Err(CliError::Config("modes must be positive".into()));
        }
        if self.c.is_some() && self.c_file.is_some() {
            return Err(CliError::Config("give either 'c' or 'c_file', not both".into()));
        }
        self.params().map(|_| ())
    }

    pub fn eigs(&self) -> Result<EigenSequence, CliError> {
        match self.model {
            ModelKind::Table { m, n } => {
                let path = self.table.as_deref().ok_or_else(|| CliError::Config("table model needs 'table'".into()))?;
                let file = File::open(self.resolve(path)).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                let eigs = EigenSequence::read_csv(file, m, n).map_err(|e| CliError::Config(e.to_string()))?;
                if eigs.len() > self.modes {
                    return EigenSequence::from_table(eigs.lambdas()[..self.modes].to_vec(), m, n)
                        .map_err(|e| CliError::Config(e.to_string()));
                }
                Ok(eigs)
            }
            kind => EigenSequence::build(kind, self.modes).map_err(|e| CliError::Config(e.to_string())),
        }
    }

    pub fn params(&self) -> Result<GSParams, CliError> {
        let (m, n) = match self.model {
            ModelKind::Harmonic1d => (2, 1),
            ModelKind::Harmonic1dPower { k } => (2 * k, 1),
            ModelKind::HarmonicNd { n } => (2, n),
            ModelKind::Table { m, n } => (m, n),
        };
        GSParams::new(self.mu, self.sigma, n, m).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn coefficient(&self) -> Result<TorusFunction, CliError> {
        if let Some(formula) = &self.c {
            let poly = parse_formula(formula).map_err(|e| CliError::Config(format!("c: {e}")))?;
            return poly.to_torus(self.grid).map_err(|e| CliError::Config(format!("c: {e}")));
        }
        if let Some(path) = &self.c_file {
            let file = File::open(self.resolve(path)).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            return TorusFunction::read_samples_csv(file).map_err(|e| CliError::Config(format!("{path}: {e}")));
        }
        Err(CliError::Config("missing coefficient: set 'c' (formula) or 'c_file'".into()))
    }
}
