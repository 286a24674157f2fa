//! Command-line front end.
//!
//! Every subcommand reads an [`ExperimentConfig`] from `--config` and/or
//! flags, writes CSV and JSON files into `--out`, and maps failures to exit
//! codes: 0 ok, 1 configuration or I/O error, 2 resonance, 3 degenerate data.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{cmd_classify, cmd_decay, cmd_diophantine, cmd_solve, cmd_witness};
pub use config::{ExperimentConfig, ForcingSpec};

use crate::spectrum::ModelKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RESONANCE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("resonance: {0}")]
    Resonance(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Resonance(_) => EXIT_RESONANCE,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hypotorus", version, about = "Global hypoellipticity experiments for D_t + c(t)P")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the mode equations for a right-hand side `f`.
    Solve,
    /// Decide global hypoellipticity for `c`.
    Classify,
    /// Distance-to-integer analysis of `κλ_j`, or a certified Liouville construction.
    Diophantine,
    /// Decay fit and seminorm tables for a solved field.
    Decay,
    /// Build the counterexample for a notGH coefficient.
    Witness,
}

/// Flags shared by all subcommands; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Print the canonical config and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// harmonic1d, harmonic1d-power:K or harmonic-nd:N.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Coefficient formula, e.g. "1/2 + i sin t".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// CSV of coefficient samples (columns t,re,im).
    #[arg(long, global = true)]
    pub c_file: Option<String>,
    /// Gelfand-Shilov index `μ >= 1/2`.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Gevrey index `σ > 1` in time.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Time grid size (power of two).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Number of modes `J`.
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Time profile of the right-hand side.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Comma-separated modes carrying `f` (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    pub f_modes: Option<Vec<usize>>,
    /// Decay rate of the planted `f` amplitudes.
    #[arg(long, global = true)]
    pub f_decay: Option<f64>,
    /// Rational or decimal `κ`, e.g. "1/2".
    #[arg(long, global = true)]
    pub kappa: Option<String>,
    /// Number of certified Liouville levels to construct.
    #[arg(long, global = true)]
    pub construct: Option<usize>,
    /// Emit witness files for notGH verdicts.
    #[arg(long, global = true)]
    pub witness: bool,
    /// Write the sampled witness modes (large for high levels).
    #[arg(long, global = true)]
    pub samples: bool,
    /// Witness levels for constant and reduction witnesses.
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Field CSV written by `solve`.
    #[arg(long, global = true)]
    pub input: Option<String>,
    #[arg(long, global = true)]
    pub k_max: Option<u32>,
    #[arg(long, global = true)]
    pub m_max: Option<u32>,
}

pub fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    let bad = || CliError::Config(format!("unknown model '{s}'"));
    let (name, arg) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b.parse::<u32>().map_err(|_| bad())?)),
        None => (s, None),
    };
    match (name, arg) {
        ("harmonic1d", None) => Ok(ModelKind::Harmonic1d),
        ("harmonic1d-power", Some(k)) => Ok(ModelKind::Harmonic1dPower { k }),
        ("harmonic-nd", Some(n)) => Ok(ModelKind::HarmonicNd { n }),
        _ => Err(bad()),
    }
}

impl Overrides {
    /// Loads the config file (if any) and applies the flags on top.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &self.model {
            cfg.model = parse_model(m)?;
        }
        if let Some(c) = &self.c {
            cfg.c = Some(c.clone());
            cfg.c_file = None;
        }
        if let Some(c) = &self.c_file {
            cfg.c_file = Some(c.clone());
            cfg.c = None;
        }
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { cfg.$field = v; })* };
        }
        set!(mu, sigma, grid, modes, levels, k_max, m_max);
        if self.kappa.is_some() {
            cfg.kappa = self.kappa.clone();
        }
        if self.construct.is_some() {
            cfg.construct = self.construct;
        }
        if self.input.is_some() {
            cfg.input = self.input.clone();
        }
        cfg.witness |= self.witness;
        cfg.samples |= self.samples;
        if let Some(formula) = &self.f {
            let f = cfg.f.get_or_insert(ForcingSpec { formula: formula.clone(), modes: None, decay: 0.0, exponent: None });
            f.formula = formula.clone();
        }
        if self.f_modes.is_some() || self.f_decay.is_some() {
            let f = cfg.f.as_mut().ok_or_else(|| CliError::Config("--f-modes/--f-decay need --f".into()))?;
            if self.f_modes.is_some() {
                f.modes = self.f_modes.clone();
            }
            if let Some(d) = self.f_decay {
                f.decay = d;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("HYPOTORUS_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    configure_threads();
    let result = cli.opts.resolve().and_then(|cfg| {
        if cli.opts.print_config {
            print!("{}", cfg.canonical_json());
            return Ok(EXIT_OK);
        }
        std::fs::create_dir_all(&cli.opts.out)?;
        match cli.command {
            Command::Solve => cmd_solve(&cfg, &cli.opts.out),
            Command::Classify => cmd_classify(&cfg, &cli.opts.out),
            Command::Diophantine => cmd_diophantine(&cfg, &cli.opts.out),
            Command::Decay => cmd_decay(&cfg, &cli.opts.out),
            Command::Witness => cmd_witness(&cfg, &cli.opts.out),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hypotorus: {e}");
            if matches!(e, CliError::Config(_)) {
                eprintln!("usage: hypotorus <solve|classify|diophantine|decay|witness> [--config FILE] [--out DIR] [flags]");
            }
            e.exit_code()
        }
    }
}
