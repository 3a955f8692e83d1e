//! Maximum-likelihood spatial lag and spatial error models.

use nalgebra::{DMatrix, DVector};

use super::frame::ModelFrame;
use super::linalg::{least_squares, spd_inverse, LeastSquares};
use super::logdet::LogDet;
use super::result::{adjusted, r_squared, two_sided_normal, Estimate, FitResult, ModelKind};
use crate::error::{Error, Result};
use crate::optim::golden_section_max;
use crate::spatial::WeightMatrix;

const COARSE_POINTS: usize = 41;
const TOLERANCE: f64 = 1e-8;

fn ln_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).ln()
}

fn concentrated(n: usize, rss: f64, logdet: f64) -> f64 {
    let n = n as f64;
    -0.5 * n * (ln_2pi() + 1.0) - 0.5 * n * (rss / n).ln() + logdet
}

fn check_weights(frame: &ModelFrame, w: &WeightMatrix) -> Result<()> {
    if w.n() != frame.n() {
        return Err(Error::DimensionMismatch { expected: frame.n(), got: w.n() });
    }
    if w.zone_ids() != frame.zone_ids() {
        return Err(Error::invalid("weight matrix zones are not aligned with the model frame"));
    }
    if !w.is_standardized() {
        log::warn!("fitting a spatial model with a binary (unstandardized) weight matrix");
    }
    Ok(())
}

fn wx_columns(w: &WeightMatrix, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let lag = w.lag(m.column(j).as_slice())?;
        out.set_column(j, &DVector::from_vec(lag));
    }
    Ok(out)
}

/// Coarse scan, then golden-section refinement of the best bracket.
fn maximize(
    parameter: &'static str,
    (lo, hi): (f64, f64),
    f: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
    let trace: Vec<(f64, f64)> = (0..COARSE_POINTS)
        .map(|k| {
            let x = if k == COARSE_POINTS - 1 { hi } else { lo + step * k as f64 };
            (x, f(x))
        })
        .collect();
    let best = trace
        .iter()
        .enumerate()
        .filter(|(_, p)| p.1.is_finite())
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k);
    let Some(k) = best else {
        return Err(Error::NoInteriorMaximum { parameter, lower: lo, upper: hi, trace });
    };
    let a = trace[k.saturating_sub(1)].0;
    let b = trace[(k + 1).min(COARSE_POINTS - 1)].0;
    let (x, fx, _) = golden_section_max(&f, a, b, TOLERANCE);
    if x - lo < 10.0 * TOLERANCE || hi - x < 10.0 * TOLERANCE {
        return Err(Error::NoInteriorMaximum { parameter, lower: lo, upper: hi, trace });
    }
    Ok((x, fx))
}

/// Central-difference Hessian with relative step 1e-5 and absolute floor 1e-7.
pub(crate) fn numerical_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let k = x.len();
    let h: Vec<f64> = x.iter().map(|v| (v.abs() * 1e-5).max(1e-7)).collect();
    let f0 = f(x);
    let mut pt = x.to_vec();
    let mut eval = |shifts: &[(usize, f64)]| {
        pt.copy_from_slice(x);
        for &(i, s) in shifts {
            pt[i] += s;
        }
        f(&pt)
    };
    let mut hess = DMatrix::zeros(k, k);
    for i in 0..k {
        let fp = eval(&[(i, h[i])]);
        let fm = eval(&[(i, -h[i])]);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = eval(&[(i, h[i]), (j, h[j])]);
            let fpm = eval(&[(i, h[i]), (j, -h[j])]);
            let fmp = eval(&[(i, -h[i]), (j, h[j])]);
            let fmm = eval(&[(i, -h[i]), (j, -h[j])]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Standard errors from the negated inverse Hessian; NaN where it is not positive definite.
fn hessian_std_errors(hess: &DMatrix<f64>) -> Vec<f64> {
    let info = -hess;
    let cov = spd_inverse(&info).or_else(|| info.clone().try_inverse());
    match cov {
        Some(c) => (0..c.nrows())
            .map(|i| if c[(i, i)] > 0.0 { c[(i, i)].sqrt() } else { f64::NAN })
            .collect(),
        None => vec![f64::NAN; hess.nrows()],
    }
}

/// Concentrated likelihood of the spatial lag model,
/// ℓ(ρ) = const + ln|I − ρW| − (n/2) ln(e(ρ)'e(ρ)/n) with e(ρ) = e₀ − ρ e_L.
pub struct LagProfile<'a> {
    frame: &'a ModelFrame,
    logdet: &'a LogDet,
    x: DMatrix<f64>,
    y: DVector<f64>,
    wy: DVector<f64>,
    base: LeastSquares,
    lagged: LeastSquares,
    e0e0: f64,
    e0el: f64,
    elel: f64,
}

impl<'a> LagProfile<'a> {
    pub fn new(frame: &'a ModelFrame, w: &WeightMatrix, logdet: &'a LogDet) -> Result<Self> {
        check_weights(frame, w)?;
        let x = frame.design();
        let terms = frame.terms();
        let wy = DVector::from_vec(w.lag(frame.y())?);
        let base = least_squares(&x, &frame.y_vector(), &terms)?;
        let lagged = least_squares(&x, &wy, &terms)?;
        let e0e0 = base.residuals.norm_squared();
        let e0el = base.residuals.dot(&lagged.residuals);
        let elel = lagged.residuals.norm_squared();
        let y = frame.y_vector();
        Ok(Self { frame, logdet, x, y, wy, base, lagged, e0e0, e0el, elel })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.logdet.search_interval()
    }

    pub fn rss(&self, rho: f64) -> f64 {
        // ‖e₀ − ρ e_L‖² expanded; clamp guards the exact-fit case
        (self.e0e0 - 2.0 * rho * self.e0el + rho * rho * self.elel).max(0.0)
    }

    pub fn loglik(&self, rho: f64) -> f64 {
        concentrated(self.frame.n(), self.rss(rho), self.logdet.eval(rho))
    }

    /// β(ρ) = (X'X)⁻¹X'(y − ρWy).
    pub fn beta(&self, rho: f64) -> Vec<f64> {
        (&self.base.beta - &self.lagged.beta * rho).iter().copied().collect()
    }

    /// Full log-likelihood in (ρ, β, σ²).
    pub fn full_loglik(&self, rho: f64, beta: &[f64], sigma2: f64) -> f64 {
        let n = self.frame.n() as f64;
        let r = &self.y - &self.wy * rho - &self.x * DVector::from_column_slice(beta);
        -0.5 * n * (ln_2pi() + sigma2.ln()) + self.logdet.eval(rho) - r.norm_squared() / (2.0 * sigma2)
    }

    /// Fit with ρ held at `rho`.
    pub fn fit_at(&self, rho: f64, converged: bool) -> FitResult {
        let frame = self.frame;
        let n = frame.n();
        let beta = self.beta(rho);
        let residuals = &self.y - &self.wy * rho - &self.x * DVector::from_column_slice(&beta);
        let sigma2 = residuals.norm_squared() / n as f64;
        let q = beta.len();
        let full = |t: &[f64]| self.full_loglik(t[0], &t[1..=q], t[q + 1]);
        let theta: Vec<f64> = std::iter::once(rho).chain(beta.iter().copied()).chain([sigma2]).collect();
        let se = hessian_std_errors(&numerical_hessian(full, &theta));
        assemble(
            ModelKind::SpatialLag,
            frame,
            beta,
            se[1..=q].to_vec(),
            Some((rho, se[0])),
            sigma2,
            self.loglik(rho),
            residuals.iter().copied().collect(),
            converged,
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    kind: ModelKind,
    frame: &ModelFrame,
    beta: Vec<f64>,
    std_errors: Vec<f64>,
    spatial: Option<(f64, f64)>,
    sigma2: f64,
    log_likelihood: f64,
    residuals: Vec<f64>,
    converged: bool,
) -> FitResult {
    let n = frame.n();
    let p_values = beta.iter().zip(&std_errors).map(|(b, s)| two_sided_normal(b / s)).collect();
    let rho = spatial.map(|(estimate, std_error)| Estimate {
        estimate,
        std_error,
        p_value: two_sided_normal(estimate / std_error),
    });
    let parameters = beta.len() + 2;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let r2 = r_squared(frame.y(), rss);
    FitResult {
        model_kind: kind,
        terms: frame.terms(),
        beta,
        std_errors,
        p_values,
        rho,
        sigma2,
        log_likelihood,
        aic: 2.0 * parameters as f64 - 2.0 * log_likelihood,
        parameters,
        r2,
        adjusted_r2: adjusted(r2, n, frame.p() as f64 + 1.0),
        n,
        residuals,
        converged,
    }
}

/// Spatial lag model y = ρWy + β₀ + Xβ + ε by concentrated maximum likelihood.
pub fn fit_spatial_lag(frame: &ModelFrame, w: &WeightMatrix) -> Result<FitResult> {
    let logdet = LogDet::new(w)?;
    fit_spatial_lag_with(frame, w, &logdet)
}

/// As [`fit_spatial_lag`], reusing a precomputed log-determinant for `w`.
pub fn fit_spatial_lag_with(frame: &ModelFrame, w: &WeightMatrix, logdet: &LogDet) -> Result<FitResult> {
    let profile = LagProfile::new(frame, w, logdet)?;
    let (rho, _) = maximize("rho", profile.interval(), |r| profile.loglik(r))?;
    Ok(profile.fit_at(rho, true))
}

/// Concentrated likelihood of the spatial error model: for each λ, regress
/// (I − λW)y on (I − λW)[1, X].
pub struct ErrorProfile<'a> {
    frame: &'a ModelFrame,
    logdet: &'a LogDet,
    x: DMatrix<f64>,
    wx: DMatrix<f64>,
    y: DVector<f64>,
    wy: DVector<f64>,
    terms: Vec<String>,
}

impl<'a> ErrorProfile<'a> {
    pub fn new(frame: &'a ModelFrame, w: &WeightMatrix, logdet: &'a LogDet) -> Result<Self> {
        check_weights(frame, w)?;
        let x = frame.design();
        let wx = wx_columns(w, &x)?;
        let y = frame.y_vector();
        let wy = DVector::from_vec(w.lag(frame.y())?);
        let terms = frame.terms();
        // surfaces rank deficiency up front
        least_squares(&x, &y, &terms)?;
        Ok(Self { frame, logdet, x, wx, y, wy, terms })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.logdet.search_interval()
    }

    fn filtered(&self, lambda: f64) -> Result<LeastSquares> {
        let ax = &self.x - &self.wx * lambda;
        let ay = &self.y - &self.wy * lambda;
        least_squares(&ax, &ay, &self.terms)
    }

    pub fn loglik(&self, lambda: f64) -> f64 {
        match self.filtered(lambda) {
            Ok(ls) => concentrated(self.frame.n(), ls.rss, self.logdet.eval(lambda)),
            Err(_) => f64::NAN,
        }
    }

    pub fn beta(&self, lambda: f64) -> Result<Vec<f64>> {
        Ok(self.filtered(lambda)?.beta.iter().copied().collect())
    }

    pub fn fit_at(&self, lambda: f64, converged: bool) -> Result<FitResult> {
        let ls = self.filtered(lambda)?;
        let n = self.frame.n();
        let beta: Vec<f64> = ls.beta.iter().copied().collect();
        let sigma2 = ls.rss / n as f64;
        let q = beta.len();
        let nf = n as f64;
        let full = |theta: &[f64]| {
            let (lam, b, s2) = (theta[0], &theta[1..=q], theta[q + 1]);
            let bv = DVector::from_column_slice(b);
            let r = (&self.y - &self.wy * lam) - (&self.x - &self.wx * lam) * bv;
            -0.5 * nf * (ln_2pi() + s2.ln()) + self.logdet.eval(lam) - r.norm_squared() / (2.0 * s2)
        };
        let theta: Vec<f64> = std::iter::once(lambda).chain(beta.iter().copied()).chain([sigma2]).collect();
        let se = hessian_std_errors(&numerical_hessian(full, &theta));
        // u = y − Xβ keeps the spatially autocorrelated error
        let residuals = &self.y - &self.x * &ls.beta;
        Ok(assemble(
            ModelKind::SpatialError,
            self.frame,
            beta,
            se[1..=q].to_vec(),
            Some((lambda, se[0])),
            sigma2,
            concentrated(n, ls.rss, self.logdet.eval(lambda)),
            residuals.iter().copied().collect(),
            converged,
        ))
    }
}

/// Spatial error model y = β₀ + Xβ + u, u = λWu + ε by concentrated maximum likelihood.
pub fn fit_spatial_error(frame: &ModelFrame, w: &WeightMatrix) -> Result<FitResult> {
    let logdet = LogDet::new(w)?;
    fit_spatial_error_with(frame, w, &logdet)
}

pub fn fit_spatial_error_with(frame: &ModelFrame, w: &WeightMatrix, logdet: &LogDet) -> Result<FitResult> {
    let profile = ErrorProfile::new(frame, w, logdet)?;
    let (lambda, _) = maximize("lambda", profile.interval(), |l| profile.loglik(l))?;
    profile.fit_at(lambda, true)
}
