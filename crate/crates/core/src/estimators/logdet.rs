use serde::Serialize;

use crate::error::{Error, Result};
use crate::spatial::WeightMatrix;

/// Distance kept between the spatial-parameter search and the spectral bounds.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

/// Eigenvalue form of `ln|I − ρW|`: Σ ln(1 − ρωᵢ).
///
/// Eigenvalues come from a symmetric matrix similar to W (W itself when binary and
/// symmetric, D^{1/2} W D^{-1/2} when W = D⁻¹C is row-standardized), so they are real.
#[derive(Debug, Clone, Serialize)]
pub struct LogDet {
    eigenvalues: Vec<f64>,
}

impl LogDet {
    pub fn new(w: &WeightMatrix) -> Result<Self> {
        if w.nnz() == 0 {
            return Err(Error::invalid("weight matrix has no links"));
        }
        let s = w.symmetric_similar()?;
        let ev = s.symmetric_eigenvalues();
        if ev.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenNonConvergence);
        }
        let mut eigenvalues: Vec<f64> = ev.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// (1/ω_min, 1/ω_max), the interval on which I − ρW is nonsingular around 0.
    pub fn bounds(&self) -> (f64, f64) {
        (1.0 / self.min_eigenvalue(), 1.0 / self.max_eigenvalue())
    }

    /// Bounds pulled inward by [`BOUNDARY_MARGIN`].
    pub fn search_interval(&self) -> (f64, f64) {
        let (lo, hi) = self.bounds();
        (lo + BOUNDARY_MARGIN, hi - BOUNDARY_MARGIN)
    }

    /// ln|I − ρW|. Outside the admissible interval the result is NaN.
    pub fn eval(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for &w in &self.eigenvalues {
            let t = 1.0 - rho * w;
            if t <= 0.0 {
                return f64::NAN;
            }
            acc += t.ln();
        }
        acc
    }
}

/// Reusable log-determinant evaluator for `w`.
pub fn log_det_system(w: &WeightMatrix) -> Result<LogDet> {
    LogDet::new(w)
}
