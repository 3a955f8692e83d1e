use serde::Serialize;

use super::frame::ModelFrame;
use super::gwr::fit_gwr;
use super::logdet::LogDet;
use super::ols::fit_ols;
use super::result::{FitResult, GwrResult};
use super::spatial::{fit_spatial_error_with, fit_spatial_lag_with};
use crate::error::Result;
use crate::spatial::{KernelSpec, WeightMatrix};

/// Which model to fit; GWR carries its kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Ols,
    SpatialLag,
    SpatialError,
    Gwr { kernel: KernelSpec },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Ols => "ols",
            ModelSpec::SpatialLag => "spatial_lag",
            ModelSpec::SpatialError => "spatial_error",
            ModelSpec::Gwr { .. } => "gwr",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Ols => "OLS",
            ModelSpec::SpatialLag => "Spatial Lag",
            ModelSpec::SpatialError => "Spatial Error",
            ModelSpec::Gwr { .. } => "GWR",
        }
    }

    pub fn is_spatial(&self) -> bool {
        matches!(self, ModelSpec::SpatialLag | ModelSpec::SpatialError)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelFit {
    Global(FitResult),
    Gwr(GwrResult),
}

impl ModelFit {
    /// AIC for global models, AICc for GWR.
    pub fn aic(&self) -> f64 {
        match self {
            ModelFit::Global(f) => f.aic,
            ModelFit::Gwr(g) => g.aic,
        }
    }

    pub fn residuals(&self) -> &[f64] {
        match self {
            ModelFit::Global(f) => &f.residuals,
            ModelFit::Gwr(g) => &g.residuals,
        }
    }
}

/// Fits `spec`; the log-determinant is computed from `w` when not supplied.
pub fn fit_model(frame: &ModelFrame, w: &WeightMatrix, logdet: Option<&LogDet>, spec: &ModelSpec) -> Result<ModelFit> {
    let owned;
    let logdet = match (spec.is_spatial(), logdet) {
        (false, _) => None,
        (true, Some(l)) => Some(l),
        (true, None) => {
            owned = LogDet::new(w)?;
            Some(&owned)
        }
    };
    Ok(match spec {
        ModelSpec::Ols => ModelFit::Global(fit_ols(frame)?),
        ModelSpec::SpatialLag => ModelFit::Global(fit_spatial_lag_with(frame, w, logdet.unwrap())?),
        ModelSpec::SpatialError => ModelFit::Global(fit_spatial_error_with(frame, w, logdet.unwrap())?),
        ModelSpec::Gwr { kernel } => ModelFit::Gwr(fit_gwr(frame, kernel)?),
    })
}
