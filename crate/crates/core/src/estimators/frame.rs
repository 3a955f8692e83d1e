use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spatial::GeoPoint;

pub const INTERCEPT: &str = "intercept";

/// Target vector, standardized predictors and zone centroids, one row per zone.
/// The intercept is not stored; estimators add it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFrame {
    zone_ids: Vec<String>,
    y: Vec<f64>,
    #[serde(skip)]
    x: DMatrix<f64>,
    columns: Vec<String>,
    centroids: Vec<GeoPoint>,
}

impl ModelFrame {
    pub fn new(
        zone_ids: Vec<String>,
        y: Vec<f64>,
        x: DMatrix<f64>,
        columns: Vec<String>,
        centroids: Vec<GeoPoint>,
    ) -> Result<Self> {
        let n = zone_ids.len();
        for (what, len) in [("target", y.len()), ("predictor rows", x.nrows()), ("centroids", centroids.len())] {
            if len != n {
                return Err(Error::invalid(format!("{what}: expected {n} rows, got {len}")));
            }
        }
        if columns.len() != x.ncols() {
            return Err(Error::DimensionMismatch { expected: x.ncols(), got: columns.len() });
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if c == INTERCEPT || !seen.insert(c.as_str()) {
                return Err(Error::invalid(format!("duplicate or reserved column name `{c}`")));
            }
        }
        if n < x.ncols() + 2 {
            return Err(Error::invalid(format!(
                "{n} rows is too few for {} predictor columns (need at least {})",
                x.ncols(),
                x.ncols() + 2
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("model frame contains missing or non-finite values"));
        }
        Ok(Self { zone_ids, y, x, columns, centroids })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of predictor columns, excluding the intercept.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn zone_ids(&self) -> &[String] {
        &self.zone_ids
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn centroids(&self) -> &[GeoPoint] {
        &self.centroids
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Term names with the intercept first.
    pub fn terms(&self) -> Vec<String> {
        std::iter::once(INTERCEPT.to_string()).chain(self.columns.iter().cloned()).collect()
    }

    /// `[1, X]`.
    pub fn design(&self) -> DMatrix<f64> {
        design_with_intercept(&self.x)
    }

    pub fn y_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y)
    }

    /// Rows `rows`, in that order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(rows.iter());
        Self::new(
            rows.iter().map(|&i| self.zone_ids[i].clone()).collect(),
            rows.iter().map(|&i| self.y[i]).collect(),
            x,
            self.columns.clone(),
            rows.iter().map(|&i| self.centroids[i]).collect(),
        )
    }

    /// Copy with predictor `name` replaced by `values`.
    pub fn with_column(&self, name: &str, values: &[f64]) -> Result<Self> {
        let j = self
            .column_index(name)
            .ok_or_else(|| Error::invalid(format!("unknown predictor column `{name}`")))?;
        if values.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: values.len() });
        }
        let mut out = self.clone();
        out.x.set_column(j, &DVector::from_column_slice(values));
        Ok(out)
    }

    /// Copy with a new target vector.
    pub fn with_target(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.zone_ids.clone(), y, self.x.clone(), self.columns.clone(), self.centroids.clone())
    }
}

pub(crate) fn design_with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    d.view_mut((0, 1), (x.nrows(), x.ncols())).copy_from(x);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(n: usize) -> Vec<GeoPoint> {
        (0..n).map(|i| GeoPoint::new(i as f64 * 0.1, 0.0).unwrap()).collect()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("z{i}")).collect()
    }

    #[test]
    fn validates_shape_and_names() {
        let x = DMatrix::from_fn(5, 2, |i, j| (i * 2 + j) as f64);
        let ok = ModelFrame::new(ids(5), vec![1.0; 5], x.clone(), vec!["a".into(), "b".into()], pts(5));
        assert!(ok.is_ok());
        assert!(ModelFrame::new(ids(5), vec![1.0; 4], x.clone(), vec!["a".into(), "b".into()], pts(5)).is_err());
        assert!(ModelFrame::new(ids(5), vec![1.0; 5], x.clone(), vec!["a".into(), "a".into()], pts(5)).is_err());
        assert!(ModelFrame::new(ids(5), vec![1.0; 5], x.clone(), vec![INTERCEPT.into(), "b".into()], pts(5)).is_err());
        assert!(ModelFrame::new(ids(5), vec![f64::NAN; 5], x, vec!["a".into(), "b".into()], pts(5)).is_err());
        let tiny = DMatrix::zeros(3, 2);
        assert!(ModelFrame::new(ids(3), vec![1.0; 3], tiny, vec!["a".into(), "b".into()], pts(3)).is_err());
    }

    #[test]
    fn subset_and_replace() {
        let x = DMatrix::from_fn(6, 1, |i, _| i as f64);
        let f = ModelFrame::new(ids(6), (0..6).map(|i| i as f64 * 10.0).collect(), x, vec!["a".into()], pts(6)).unwrap();
        let s = f.subset(&[4, 1, 3]).unwrap();
        assert_eq!(s.zone_ids(), &["z4", "z1", "z3"]);
        assert_eq!(s.y(), &[40.0, 10.0, 30.0]);
        assert_eq!(s.x()[(0, 0)], 4.0);
        let r = f.with_column("a", &[9.0; 6]).unwrap();
        assert!(r.x().iter().all(|&v| v == 9.0));
        assert!(f.with_column("missing", &[0.0; 6]).is_err());
        assert_eq!(f.terms(), vec![INTERCEPT.to_string(), "a".to_string()]);
        assert_eq!(f.design().column(0).sum(), 6.0);
    }
}
