//! Global hypoellipticity toolkit for operators `L = D_t + c(t)P` on
//! `T × R^n`, where `P` is a globally elliptic operator known through its
//! spectrum.

pub mod classifier;
pub mod cli;
pub mod diagnostics;
pub mod diophantine;
pub mod error;
pub mod formula;
pub mod io;
mod quadrature;
pub mod regression;
pub mod solver;
pub mod spectrum;
pub mod torus;
pub mod witness;

pub use error::Error;
pub use torus::{MeanDecomposition, TorusFunction};
pub use spectrum::{EigenSequence, HermiteBasis, ModelKind};
