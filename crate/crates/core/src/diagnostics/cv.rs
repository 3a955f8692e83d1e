use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{fit_model, gwr_predict, predict, ModelFit, ModelFrame, ModelSpec};
use crate::spatial::WeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldMae {
    pub train_mae: f64,
    pub test_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub model: &'static str,
    pub k: usize,
    pub train_mae: f64,
    pub test_mae: f64,
    pub per_fold: Vec<FoldMae>,
    pub seed: u64,
}

/// Seeded partition of `0..n` into `k` test folds whose sizes differ by at most one.
/// Indices inside each fold are sorted.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("cross-validation needs k >= 2, got {k}")));
    }
    if n < 2 * k {
        return Err(Error::invalid(format!("{n} zones is too few for {k} folds (need at least {})", 2 * k)));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn run_fold(frame: &ModelFrame, w: &WeightMatrix, model: &ModelSpec, test: &[usize]) -> Result<FoldMae> {
    let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
    let train: Vec<usize> = (0..frame.n()).filter(|i| !in_test.contains(i)).collect();
    let parameters = frame.p() + 3;
    if train.len() < parameters {
        return Err(Error::invalid(format!(
            "training fold has {} rows for {parameters} parameters; use a smaller k",
            train.len()
        )));
    }
    let train_frame = frame.subset(&train)?;
    let test_x: DMatrix<f64> = frame.x().select_rows(test.iter());
    let test_y: Vec<f64> = test.iter().map(|&i| frame.y()[i]).collect();
    let train_w = if model.is_spatial() { w.restrict(&train)? } else { w.clone() };
    let fit = fit_model(&train_frame, &train_w, None, model)?;
    let (train_pred, test_pred) = match (&fit, model) {
        (ModelFit::Global(g), _) => (predict(g, train_frame.x())?, predict(g, &test_x)?),
        (ModelFit::Gwr(g), ModelSpec::Gwr { kernel }) => {
            let points: Vec<_> = test.iter().map(|&i| frame.centroids()[i]).collect();
            (g.fitted.clone(), gwr_predict(&train_frame, kernel, &points, &test_x)?)
        }
        _ => unreachable!("GWR fit from a non-GWR spec"),
    };
    Ok(FoldMae {
        train_mae: mae(&train_pred, train_frame.y()),
        test_mae: mae(&test_pred, &test_y),
    })
}

/// k-fold cross-validated mean absolute error on the (transformed) target scale.
///
/// Spatial models are refit on the training zones with W restricted to them (and
/// re-standardized when W is standardized). Held-out zones are predicted from the
/// trend term β₀ + xβ only; GWR predicts them by a local fit at their centroid.
pub fn kfold_cv(frame: &ModelFrame, w: &WeightMatrix, model: &ModelSpec, k: usize, seed: u64) -> Result<CvResult> {
    if w.n() != frame.n() {
        return Err(Error::DimensionMismatch { expected: frame.n(), got: w.n() });
    }
    let folds = fold_assignment(frame.n(), k, seed)?;
    let per_fold = folds
        .par_iter()
        .map(|test| run_fold(frame, w, model, test))
        .collect::<Result<Vec<_>>>()?;
    let kf = k as f64;
    Ok(CvResult {
        model: model.name(),
        k,
        train_mae: per_fold.iter().map(|f| f.train_mae).sum::<f64>() / kf,
        test_mae: per_fold.iter().map(|f| f.test_mae).sum::<f64>() / kf,
        per_fold,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_cover_each_zone_once() {
        let folds = fold_assignment(23, 5, 7).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(folds, fold_assignment(23, 5, 7).unwrap());
        assert!(fold_assignment(9, 5, 1).is_err());
        assert!(fold_assignment(9, 1, 1).is_err());
    }
}
