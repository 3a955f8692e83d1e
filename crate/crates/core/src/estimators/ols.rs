use nalgebra::DMatrix;

use super::frame::{design_with_intercept, ModelFrame};
use super::linalg::least_squares;
use super::result::{adjusted, gaussian_loglik, r_squared, two_sided_t, FitResult, ModelKind};
use crate::error::{Error, Result};

/// Ordinary least squares with an intercept.
///
/// The log-likelihood uses the ML variance RSS/n; standard errors use RSS/(n − k).
pub fn fit_ols(frame: &ModelFrame) -> Result<FitResult> {
    let terms = frame.terms();
    let ls = least_squares(&frame.design(), &frame.y_vector(), &terms)?;
    let n = frame.n();
    let q = terms.len();
    let df = (n - q) as f64;
    let s2 = ls.rss / df;
    let std_errors: Vec<f64> = (0..q).map(|j| (s2 * ls.xtx_inv[(j, j)]).sqrt()).collect();
    let p_values = ls
        .beta
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| two_sided_t(b / se, df))
        .collect();
    let log_likelihood = gaussian_loglik(n, ls.rss);
    let parameters = q + 1;
    let r2 = r_squared(frame.y(), ls.rss);
    Ok(FitResult {
        model_kind: ModelKind::Ols,
        terms,
        beta: ls.beta.iter().copied().collect(),
        std_errors,
        p_values,
        rho: None,
        sigma2: ls.rss / n as f64,
        log_likelihood,
        aic: 2.0 * parameters as f64 - 2.0 * log_likelihood,
        parameters,
        r2,
        adjusted_r2: adjusted(r2, n, frame.p() as f64),
        n,
        residuals: ls.residuals.iter().copied().collect(),
        converged: true,
    })
}

/// Trend prediction `β₀ + x_new β` for any global model kind. Spatial terms are ignored.
pub fn predict(fit: &FitResult, x_new: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x_new.ncols() + 1 != fit.beta.len() {
        return Err(Error::DimensionMismatch { expected: fit.beta.len() - 1, got: x_new.ncols() });
    }
    let beta = nalgebra::DVector::from_column_slice(&fit.beta);
    Ok((design_with_intercept(x_new) * beta).iter().copied().collect())
}
