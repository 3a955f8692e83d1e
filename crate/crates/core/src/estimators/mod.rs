//! OLS, spatial lag, spatial error and GWR estimators.

mod frame;
mod gwr;
mod linalg;
mod logdet;
mod model;
mod ols;
mod result;
mod spatial;

pub use frame::{ModelFrame, INTERCEPT};
pub use gwr::{aicc, fit_gwr, fit_gwr_with, gwr_hat_matrix, gwr_predict, select_bandwidth, DistanceMatrix};
pub use logdet::{log_det_system, LogDet, BOUNDARY_MARGIN};
pub use model::{fit_model, ModelFit, ModelSpec};
pub use ols::{fit_ols, predict};
pub use result::{Estimate, FitResult, GwrResult, ModelKind};
pub use spatial::{
    fit_spatial_error, fit_spatial_error_with, fit_spatial_lag, fit_spatial_lag_with, ErrorProfile, LagProfile,
};

pub(crate) use result::two_sided_normal;
