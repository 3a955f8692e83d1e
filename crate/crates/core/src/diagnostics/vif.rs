use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::transforms::mean_sd;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VifEntry {
    pub column: String,
    /// Positive infinity under perfect collinearity (serialized as null).
    pub vif: f64,
}

/// Variance inflation factors 1/(1 − R²ⱼ), regressing each column on the others
/// plus an intercept. The auxiliary fits use a rank-revealing SVD, so perfectly
/// collinear columns yield +∞ instead of an error.
pub fn vif(x: &DMatrix<f64>, names: &[String]) -> Result<Vec<VifEntry>> {
    let (n, p) = x.shape();
    if names.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: names.len() });
    }
    if n <= p + 1 {
        return Err(Error::invalid(format!("VIF needs more than {} rows, got {n}", p + 1)));
    }
    for (j, col) in x.column_iter().enumerate() {
        let (mean, sd) = mean_sd(col.as_slice());
        if !(sd > 0.0) || sd <= mean.abs() * 1e-14 {
            return Err(Error::ConstantColumn(names[j].clone()));
        }
    }
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let target: DVector<f64> = x.column(j).into_owned();
        let mut design = DMatrix::from_element(n, p, 1.0);
        for (c, k) in (0..p).filter(|&k| k != j).enumerate() {
            design.set_column(c + 1, &x.column(k));
        }
        let svd = design.clone().svd(true, true);
        let eps = 1e-10 * svd.singular_values.max();
        let beta = svd.solve(&target, eps).map_err(|e| Error::Numerical(e.to_string()))?;
        let rss = (&target - &design * beta).norm_squared();
        let mean = target.mean();
        let tss: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
        let unexplained = rss / tss;
        let vif = if unexplained <= 1e-12 { f64::INFINITY } else { 1.0 / unexplained };
        out.push(VifEntry { column: names[j].clone(), vif });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicated_column_is_infinite() {
        let x = DMatrix::from_row_slice(5, 3, &[
            1.0, 1.0, 0.3, 2.0, 2.0, -1.0, 3.0, 3.0, 0.5, 4.0, 4.0, 2.0, 5.0, 5.0, 0.1,
        ]);
        let names: Vec<String> = ["a", "a2", "b"].iter().map(|s| s.to_string()).collect();
        let v = vif(&x, &names).unwrap();
        assert!(v[0].vif.is_infinite() && v[1].vif.is_infinite());
        assert!(v[2].vif.is_finite());
    }
}
