//! Residual diagnostics, multicollinearity screening and cross-validation.

mod cv;
mod moran;
mod vif;

pub use cv::{fold_assignment, kfold_cv, CvResult, FoldMae};
pub use moran::{morans_i, MoranResult};
pub use vif::{vif, VifEntry};
