//! Spatial econometrics engine.
//!
//! Fuses multi-geography tables into a zone-level model frame, then fits and
//! compares OLS, spatial lag, spatial error and geographically weighted
//! regressions with Moran's I, AIC and cross-validated error.

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod fusion;
pub mod optim;
pub mod pipeline;
pub mod spatial;
pub mod transforms;

pub use error::{Error, Result};
