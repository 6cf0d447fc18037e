//! Generalized Aluthge transforms and numerical-radius inequality checks for
//! dense complex matrices.

pub mod catalog;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod polar;
pub mod radii;
pub mod report;
pub mod transforms;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
