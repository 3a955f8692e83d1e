use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares solution via Householder QR.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    /// (X'X)⁻¹
    pub xtx_inv: DMatrix<f64>,
}

const RANK_TOL: f64 = 1e-10;

/// Solves `min ‖y − Xβ‖`. A column whose QR pivot is negligible relative to its
/// norm is reported by name as linearly dependent.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LeastSquares> {
    let (n, q) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n < q {
        return Err(Error::invalid(format!("{n} observations cannot identify {q} coefficients")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..q {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
            return Err(Error::RankDeficient(name));
        }
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty = qty.rows(0, q).into_owned();
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let residuals = y - x * &beta;
    let rss = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(q, q))
        .ok_or_else(|| Error::Numerical("triangular inverse failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares { beta, residuals, rss, xtx_inv })
}

/// Inverse of a symmetric positive definite matrix, or `None`.
pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_dependent_column() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 1.0, 2.0, 1.0, 2.0, 4.0, 1.0, 3.0, 6.0, 1.0, 4.0, 8.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let names = vec!["intercept".into(), "a".into(), "b".into()];
        match least_squares(&x, &y, &names) {
            Err(Error::RankDeficient(c)) => assert_eq!(c, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
