use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::spatial::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ols,
    SpatialLag,
    SpatialError,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Ols => "OLS",
            ModelKind::SpatialLag => "Spatial Lag",
            ModelKind::SpatialError => "Spatial Error",
        }
    }

    /// Name of the autoregressive parameter, when the model has one.
    pub fn spatial_parameter(&self) -> Option<&'static str> {
        match self {
            ModelKind::Ols => None,
            ModelKind::SpatialLag => Some("rho"),
            ModelKind::SpatialError => Some("lambda"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
}

/// A fitted global model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model_kind: ModelKind,
    pub terms: Vec<String>,
    /// Coefficients with the intercept first.
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Autoregressive parameter: ρ for the lag model, λ for the error model.
    pub rho: Option<Estimate>,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    /// Number of estimated parameters counted by the AIC.
    pub parameters: usize,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub n: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl FitResult {
    pub fn coefficient(&self, term: &str) -> Option<Estimate> {
        let i = self.terms.iter().position(|t| t == term)?;
        Some(Estimate {
            estimate: self.beta[i],
            std_error: self.std_errors[i],
            p_value: self.p_values[i],
        })
    }
}

/// A fitted geographically weighted regression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwrResult {
    pub terms: Vec<String>,
    /// One row of local coefficients per zone, intercept first.
    pub local_beta: Vec<Vec<f64>>,
    pub local_std_errors: Vec<Vec<f64>>,
    pub kernel: KernelSpec,
    /// tr(S), the trace of the hat matrix.
    pub effective_parameters: f64,
    pub sigma2: f64,
    pub log_likelihood: f64,
    /// Small-sample corrected AIC (AICc).
    pub aic: f64,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub n: usize,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl GwrResult {
    /// Mean of each local coefficient across zones.
    pub fn mean_coefficients(&self) -> Vec<f64> {
        column_means(&self.local_beta)
    }

    pub fn mean_std_errors(&self) -> Vec<f64> {
        column_means(&self.local_std_errors)
    }
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let q = rows.first().map_or(0, Vec::len);
    (0..q)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect()
}

pub(crate) fn gaussian_loglik(n: usize, rss: f64) -> f64 {
    let n = n as f64;
    -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (rss / n).ln() + 1.0)
}

pub(crate) fn two_sided_normal(z: f64) -> f64 {
    if !z.is_finite() {
        return f64::NAN;
    }
    let normal = Normal::standard();
    (2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0)
}

pub(crate) fn two_sided_t(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return f64::NAN;
    }
    match StudentsT::new(0.0, 1.0, df) {
        Ok(d) => (2.0 * d.cdf(-t.abs())).clamp(0.0, 1.0),
        Err(_) => f64::NAN,
    }
}

pub(crate) fn r_squared(y: &[f64], rss: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    1.0 - rss / tss
}

/// 1 − (1 − R²)(n − 1)/(n − regressors − 1).
pub(crate) fn adjusted(r2: f64, n: usize, regressors: f64) -> f64 {
    let n = n as f64;
    1.0 - (1.0 - r2) * (n - 1.0) / (n - regressors - 1.0)
}
