use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spatial::WeightMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranResult {
    pub statistic: f64,
    /// −1/(n − 1)
    pub expectation: f64,
    /// Variance under the randomization assumption.
    pub variance: f64,
    pub z_score: f64,
    pub p_analytic: f64,
    pub p_permutation: Option<f64>,
    pub permutations: usize,
    pub seed: u64,
}

fn statistic(z: &[f64], w: &WeightMatrix, scale: f64, zz: f64) -> f64 {
    let mut num = 0.0;
    for (i, row) in (0..w.n()).map(|i| (i, w.row(i))) {
        let lag: f64 = row.iter().map(|&(j, v)| v * z[j]).sum();
        num += z[i] * lag;
    }
    scale * num / zz
}

/// Global Moran's I with randomization-assumption moments and an optional
/// permutation null drawn from `seed` (one ChaCha stream per permutation).
pub fn morans_i(values: &[f64], w: &WeightMatrix, permutations: usize, seed: u64) -> Result<MoranResult> {
    let n = w.n();
    if values.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: values.len() });
    }
    if n < 4 {
        return Err(Error::invalid("Moran's I needs at least 4 zones"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("Moran's I input contains non-finite values"));
    }
    let s0 = w.total_weight();
    if s0 <= 0.0 {
        return Err(Error::invalid("weight matrix has no links"));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let z: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let zz: f64 = z.iter().map(|v| v * v).sum();
    let scale_ref = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if zz <= (1e-14 * scale_ref).powi(2) * nf {
        return Err(Error::invalid("Moran's I is undefined for a constant vector"));
    }
    let scale = nf / s0;
    let stat = statistic(&z, w, scale, zz);

    let mut s1 = 0.0;
    let mut row_sum = vec![0.0; n];
    let mut col_sum = vec![0.0; n];
    for (i, j, v) in w.triplets() {
        let t = w.get(j, i);
        s1 += if t > 0.0 { (v + t).powi(2) } else { 2.0 * v * v };
        row_sum[i] += v;
        col_sum[j] += v;
    }
    s1 *= 0.5;
    let s2: f64 = row_sum.iter().zip(&col_sum).map(|(r, c)| (r + c).powi(2)).sum();
    let z4: f64 = z.iter().map(|v| v.powi(4)).sum();
    let b2 = nf * z4 / (zz * zz);
    let expectation = -1.0 / (nf - 1.0);
    let e_i2 = (nf * ((nf * nf - 3.0 * nf + 3.0) * s1 - nf * s2 + 3.0 * s0 * s0)
        - b2 * ((nf * nf - nf) * s1 - 2.0 * nf * s2 + 6.0 * s0 * s0))
        / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0) * s0 * s0);
    let variance = e_i2 - expectation * expectation;
    let z_score = (stat - expectation) / variance.sqrt();
    let p_analytic = crate::estimators::two_sided_normal(z_score);

    let p_permutation = (permutations > 0).then(|| {
        let observed = (stat - expectation).abs();
        let extreme = (0..permutations)
            .into_par_iter()
            .filter(|&k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let mut perm = z.clone();
                perm.shuffle(&mut rng);
                (statistic(&perm, w, scale, zz) - expectation).abs() >= observed
            })
            .count();
        (1 + extreme) as f64 / (1 + permutations) as f64
    });

    Ok(MoranResult {
        statistic: stat,
        expectation,
        variance,
        z_score,
        p_analytic,
        p_permutation,
        permutations,
        seed,
    })
}
