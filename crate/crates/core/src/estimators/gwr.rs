//! Geographically weighted regression and AICc bandwidth selection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::frame::{design_with_intercept, ModelFrame};
use super::result::{adjusted, gaussian_loglik, r_squared, GwrResult};
use crate::error::{Error, Result};
use crate::optim::{golden_section_max, golden_section_min_int};
use crate::spatial::{haversine_unchecked, kernel_weights_from_distances, GeoPoint, KernelKind, KernelSpec};

/// Dense great-circle distances between centroids, in miles.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(points: &[GeoPoint]) -> Self {
        let n = points.len();
        let d = points
            .par_iter()
            .flat_map_iter(|&a| points.iter().map(move |&b| haversine_unchecked(a, b)))
            .collect();
        Self { n, d }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    /// Smallest nonzero and largest pairwise distance.
    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for &v in &self.d {
            if v > 0.0 {
                lo = lo.min(v);
            }
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

struct LocalFit {
    beta: DVector<f64>,
    /// (i, i) element of the hat matrix
    leverage: f64,
    /// diag((X'WX)⁻¹ X'W²X (X'WX)⁻¹)
    var_diag: Vec<f64>,
}

/// Weighted least squares at one focal location.
fn local_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    weights: &[f64],
    zone: &str,
) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let q = x.ncols();
    let mut xtwx = DMatrix::<f64>::zeros(q, q);
    let mut xtw2x = DMatrix::<f64>::zeros(q, q);
    let mut xtwy = DVector::<f64>::zeros(q);
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = x.row(k);
        for a in 0..q {
            let wa = w * row[a];
            xtwy[a] += wa * y[k];
            for b in 0..=a {
                xtwx[(a, b)] += wa * row[b];
                xtw2x[(a, b)] += wa * w * row[b];
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            xtwx[(b, a)] = xtwx[(a, b)];
            xtw2x[(b, a)] = xtw2x[(a, b)];
        }
    }
    let singular = || Error::SingularLocalDesign { zone: zone.to_string() };
    let chol = xtwx.clone().cholesky().ok_or_else(singular)?;
    let diag = chol.l_dirty().diagonal();
    let (mn, mx) = diag.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    if !(mn > 0.0) || (mn / mx).powi(2) < 1e-13 {
        return Err(singular());
    }
    let inv = chol.inverse();
    let beta = &inv * xtwy;
    Ok((beta, inv, xtw2x))
}

struct GwrCore {
    local: Vec<LocalFit>,
}

fn fit_core(
    zone_ids: &[String],
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    dist: &DistanceMatrix,
    spec: &KernelSpec,
) -> Result<GwrCore> {
    let n = x.nrows();
    let local = (0..n)
        .into_par_iter()
        .map(|i| {
            let weights = kernel_weights_from_distances(dist.row(i), spec)?;
            let (beta, inv, xtw2x) = local_fit(x, y, &weights, &zone_ids[i])?;
            let xi = x.row(i).transpose();
            let leverage = (xi.transpose() * &inv * &xi)[(0, 0)] * weights[i];
            let v = &inv * xtw2x * &inv;
            Ok(LocalFit { beta, leverage, var_diag: v.diagonal().iter().copied().collect() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GwrCore { local })
}

/// AICc = n ln(RSS/n) + n ln(2π) + n(n + tr S)/(n − 2 − tr S); +∞ when tr S ≥ n − 2.
pub fn aicc(n: usize, rss: f64, trace_s: f64) -> f64 {
    let nf = n as f64;
    if trace_s >= nf - 2.0 {
        return f64::INFINITY;
    }
    nf * (rss / nf).ln() + nf * (2.0 * std::f64::consts::PI).ln() + nf * (nf + trace_s) / (nf - 2.0 - trace_s)
}

fn summarize(frame: &ModelFrame, spec: KernelSpec, core: GwrCore) -> GwrResult {
    let n = frame.n();
    let x = frame.design();
    let fitted: Vec<f64> = core.local.iter().enumerate().map(|(i, l)| x.row(i).dot(&l.beta.transpose())).collect();
    let residuals: Vec<f64> = frame.y().iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let trace_s: f64 = core.local.iter().map(|l| l.leverage).sum();
    let sigma2 = rss / (n as f64 - trace_s);
    let r2 = r_squared(frame.y(), rss);
    GwrResult {
        terms: frame.terms(),
        local_beta: core.local.iter().map(|l| l.beta.iter().copied().collect()).collect(),
        local_std_errors: core
            .local
            .iter()
            .map(|l| l.var_diag.iter().map(|v| (sigma2 * v).sqrt()).collect())
            .collect(),
        kernel: spec,
        effective_parameters: trace_s,
        sigma2,
        log_likelihood: gaussian_loglik(n, rss),
        aic: aicc(n, rss, trace_s),
        r2,
        adjusted_r2: adjusted(r2, n, trace_s),
        n,
        fitted,
        residuals,
    }
}

/// Local weighted least squares at every zone centroid.
pub fn fit_gwr(frame: &ModelFrame, spec: &KernelSpec) -> Result<GwrResult> {
    let dist = DistanceMatrix::new(frame.centroids());
    fit_gwr_with(frame, spec, &dist)
}

pub fn fit_gwr_with(frame: &ModelFrame, spec: &KernelSpec, dist: &DistanceMatrix) -> Result<GwrResult> {
    spec.validate(frame.n())?;
    let core = fit_core(frame.zone_ids(), &frame.design(), &frame.y_vector(), dist, spec)?;
    Ok(summarize(frame, *spec, core))
}

/// Hat matrix S (ŷ = Sy) assembled row by row; O(n²) memory.
pub fn gwr_hat_matrix(frame: &ModelFrame, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    spec.validate(frame.n())?;
    let dist = DistanceMatrix::new(frame.centroids());
    let x = frame.design();
    let y = frame.y_vector();
    let n = frame.n();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        let w = kernel_weights_from_distances(dist.row(i), spec)?;
        let (_, inv, _) = local_fit(&x, &y, &w, &frame.zone_ids()[i])?;
        let xi_inv = x.row(i) * inv;
        for k in 0..n {
            s[(i, k)] = (&xi_inv * x.row(k).transpose())[(0, 0)] * w[k];
        }
    }
    Ok(s)
}

/// Local GWR predictions at new locations from a training frame.
pub fn gwr_predict(train: &ModelFrame, spec: &KernelSpec, points: &[GeoPoint], x_new: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x_new.ncols() != train.p() || x_new.nrows() != points.len() {
        return Err(Error::DimensionMismatch { expected: train.p(), got: x_new.ncols() });
    }
    spec.validate(train.n())?;
    let x = train.design();
    let y = train.y_vector();
    let design_new = design_with_intercept(x_new);
    points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let d: Vec<f64> = train.centroids().iter().map(|&c| haversine_unchecked(p, c)).collect();
            let w = kernel_weights_from_distances(&d, spec)?;
            let (beta, _, _) = local_fit(&x, &y, &w, &format!("prediction point {i}"))?;
            Ok(design_new.row(i).dot(&beta.transpose()))
        })
        .collect()
}

fn score(frame: &ModelFrame, dist: &DistanceMatrix, spec: &KernelSpec) -> f64 {
    match fit_gwr_with(frame, spec, dist) {
        Ok(r) if r.aic.is_finite() => r.aic,
        _ => f64::INFINITY,
    }
}

/// Golden-section search minimizing AICc over the bandwidth.
///
/// Adaptive kernels search neighbor counts in [p + 2, n − 1]; fixed kernels search
/// miles between the smallest nonzero and the largest inter-centroid distance.
pub fn select_bandwidth(frame: &ModelFrame, kind: KernelKind, adaptive: bool) -> Result<KernelSpec> {
    let n = frame.n();
    if n < 30 {
        return Err(Error::invalid(format!("bandwidth selection needs at least 30 zones, got {n}")));
    }
    let dist = DistanceMatrix::new(frame.centroids());
    let (spec, best) = if adaptive {
        let lo = frame.p() + 2;
        let hi = n - 1;
        let (k, v) = golden_section_min_int(|k| score(frame, &dist, &KernelSpec::adaptive(kind, k)), lo, hi);
        (KernelSpec::adaptive(kind, k), v)
    } else {
        let (lo, hi) = dist.range();
        if !(lo.is_finite() && hi > lo) {
            return Err(Error::invalid("centroids do not span a distance range"));
        }
        let (h, v, _) = golden_section_max(
            |h| -score(frame, &dist, &KernelSpec::fixed(kind, h)),
            lo,
            hi,
            1e-3 * (hi - lo),
        );
        (KernelSpec::fixed(kind, h), -v)
    };
    if !best.is_finite() {
        return Err(Error::Numerical(
            "AICc is undefined across the whole bandwidth range (tr(S) >= n - 2 or singular local fits)".into(),
        ));
    }
    Ok(spec)
}
