//! Gasper-Rahman multivariable Askey-Wilson polynomials, the commuting
//! q-difference operators they diagonalize, finite q-Onsager modules and the
//! q-Dolan-Grady hierarchy, with numerical verification of the identities
//! tying them together.

pub mod classical_q1;
pub mod cli;
pub mod config;
pub mod error;
pub mod gr_poly;
pub mod hierarchy;
pub mod ladder;
pub mod linalg;
pub mod onsager_modules;
pub mod ortho;
pub mod qcore;
pub mod qdiff_ops;
pub mod report;
pub mod sample;
pub mod suites;

pub use error::{Error, Result};
pub use qcore::{NumericPolicy, C64};
