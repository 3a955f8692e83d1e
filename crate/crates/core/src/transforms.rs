//! Box-Cox transformation of the target and z-scoring of predictors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::golden_section_max;

pub const LAMBDA_BOUNDS: (f64, f64) = (-2.0, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxSpec {
    pub lambda: f64,
    pub offset: f64,
}

fn shifted(y: &[f64], offset: f64) -> Result<Vec<f64>> {
    if !(offset >= 0.0 && offset.is_finite()) {
        return Err(Error::invalid(format!("Box-Cox offset must be nonnegative, got {offset}")));
    }
    y.iter()
        .enumerate()
        .map(|(index, &v)| {
            let s = v + offset;
            if s > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(Error::NonPositive { index, value: s })
            }
        })
        .collect()
}

#[inline]
fn transform_one(v: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        v.ln()
    } else if lambda.abs() < 1e-4 {
        (lambda * v.ln()).exp_m1() / lambda
    } else {
        (v.powf(lambda) - 1.0) / lambda
    }
}

/// `((y + offset)^λ − 1)/λ`, or `ln(y + offset)` at λ = 0.
pub fn boxcox(y: &[f64], spec: &BoxCoxSpec) -> Result<Vec<f64>> {
    Ok(shifted(y, spec.offset)?
        .into_iter()
        .map(|v| transform_one(v, spec.lambda))
        .collect())
}

/// Profile log-likelihood of λ for already-shifted data with `log_sum = Σ ln v`.
fn profile(v: &[f64], log_sum: f64, lambda: f64) -> f64 {
    let n = v.len() as f64;
    let t: Vec<f64> = v.iter().map(|&x| transform_one(x, lambda)).collect();
    let mean = t.iter().sum::<f64>() / n;
    let var = t.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    -0.5 * n * var.ln() + (lambda - 1.0) * log_sum
}

/// Box-Cox profile log-likelihood at `lambda` (normal likelihood of the transformed
/// data, variance profiled out, plus the Jacobian term).
pub fn boxcox_profile_loglik(y: &[f64], offset: f64, lambda: f64) -> Result<f64> {
    let v = shifted(y, offset)?;
    let log_sum = v.iter().map(|x| x.ln()).sum();
    Ok(profile(&v, log_sum, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCoxEstimate {
    pub lambda: f64,
    pub log_likelihood: f64,
    /// λ̂ landed within 1e-3 of a search bound.
    pub at_bound: bool,
}

/// Maximum-likelihood λ on [−2, 2] by golden-section search (tolerance 1e-6).
pub fn boxcox_mle(y: &[f64], offset: f64) -> Result<BoxCoxEstimate> {
    if y.len() < 3 {
        return Err(Error::invalid("Box-Cox estimation needs at least 3 observations"));
    }
    let v = shifted(y, offset)?;
    let first = v[0];
    if v.iter().all(|&x| x == first) {
        return Err(Error::invalid("Box-Cox likelihood is flat for a constant target"));
    }
    let log_sum: f64 = v.iter().map(|x| x.ln()).sum();
    let (lo, hi) = LAMBDA_BOUNDS;
    let (lambda, log_likelihood, _) = golden_section_max(|l| profile(&v, log_sum, l), lo, hi, 1e-6);
    Ok(BoxCoxEstimate {
        lambda,
        log_likelihood,
        at_bound: lambda - lo < 1e-3 || hi - lambda < 1e-3,
    })
}

/// Column means and sample (n − 1) standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub columns: Vec<String>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl StandardizationParams {
    pub fn unstandardize(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), got: z.ncols() });
        }
        let mut out = z.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.apply(|v| *v = *v * self.std_devs[j] + self.means[j]);
        }
        Ok(out)
    }
}

pub(crate) fn mean_sd(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    // second pass corrects the mean for rounding
    let mean = mean + col.iter().map(|v| v - mean).sum::<f64>() / n;
    let ss = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Standardizes each column to sample mean 0 and sample standard deviation 1.
pub fn zscore(x: &DMatrix<f64>, names: &[String]) -> Result<(DMatrix<f64>, StandardizationParams)> {
    if names.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), got: names.len() });
    }
    if x.nrows() < 2 {
        return Err(Error::invalid("standardization needs at least two rows"));
    }
    let mut out = x.clone();
    let mut means = Vec::with_capacity(x.ncols());
    let mut sds = Vec::with_capacity(x.ncols());
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let (mean, sd) = mean_sd(col.as_slice());
        if !(sd > 0.0) || sd <= mean.abs() * 1e-14 {
            return Err(Error::ConstantColumn(names[j].clone()));
        }
        col.apply(|v| *v = (*v - mean) / sd);
        means.push(mean);
        sds.push(sd);
    }
    Ok((out, StandardizationParams { columns: names.to_vec(), means, std_devs: sds }))
}
