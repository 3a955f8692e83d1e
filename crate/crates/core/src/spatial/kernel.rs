use serde::{Deserialize, Serialize};

use super::geometry::{haversine_unchecked, GeoPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    Bisquare,
}

/// GWR distance-decay kernel. `bandwidth` is in miles for a fixed kernel and a
/// nearest-neighbor count for an adaptive one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: f64,
    pub adaptive: bool,
}

impl KernelSpec {
    pub fn fixed(kind: KernelKind, miles: f64) -> Self {
        Self { kind, bandwidth: miles, adaptive: false }
    }

    pub fn adaptive(kind: KernelKind, neighbors: usize) -> Self {
        Self { kind, bandwidth: neighbors as f64, adaptive: true }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if self.adaptive {
            if self.bandwidth.fract() != 0.0 {
                return Err(Error::invalid("adaptive bandwidth must be an integer neighbor count"));
            }
            if self.bandwidth as usize >= n {
                return Err(Error::invalid(format!(
                    "adaptive neighbor count {} must be below the number of locations ({n})",
                    self.bandwidth
                )));
            }
        }
        Ok(())
    }

    /// Kernel value at distance `d` for scale `h`.
    #[inline]
    pub fn weight(&self, d: f64, h: f64) -> f64 {
        let u = d / h;
        match self.kind {
            KernelKind::Gaussian => (-0.5 * u * u).exp(),
            KernelKind::Bisquare => {
                if u < 1.0 {
                    let t = 1.0 - u * u;
                    t * t
                } else {
                    0.0
                }
            }
        }
    }
}

/// Weights from precomputed distances. The adaptive scale is the distance of the
/// `bandwidth`-th nearest location, counting the closest one as first.
pub fn kernel_weights_from_distances(distances: &[f64], spec: &KernelSpec) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(Error::invalid("no locations for kernel weights"));
    }
    spec.validate(distances.len())?;
    let h = if spec.adaptive {
        let k = spec.bandwidth as usize;
        let mut sorted = distances.to_vec();
        let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, f64::total_cmp);
        *kth
    } else {
        spec.bandwidth
    };
    if h <= 0.0 {
        return Err(Error::invalid("adaptive bandwidth resolves to zero distance (coincident locations)"));
    }
    Ok(distances
        .iter()
        .map(|&d| if d == 0.0 { 1.0 } else { spec.weight(d, h) })
        .collect())
}

/// Kernel weights of every location relative to `focal`, by great-circle distance.
pub fn kernel_weights(focal: GeoPoint, locations: &[GeoPoint], spec: &KernelSpec) -> Result<Vec<f64>> {
    let d: Vec<f64> = locations.iter().map(|&p| haversine_unchecked(focal, p)).collect();
    kernel_weights_from_distances(&d, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let b = KernelSpec::fixed(KernelKind::Bisquare, 2.0);
        let g = KernelSpec::fixed(KernelKind::Gaussian, 2.0);
        assert_eq!(b.weight(0.0, 2.0), 1.0);
        assert_eq!(g.weight(0.0, 2.0), 1.0);
        assert_eq!(b.weight(2.0, 2.0), 0.0);
        assert_eq!(b.weight(1.0, 2.0), 0.5625);
        assert!((g.weight(2.0, 2.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn adaptive_scale_is_kth_nearest() {
        let d = [0.0, 3.0, 1.0, 2.0, 4.0];
        let w = kernel_weights_from_distances(&d, &KernelSpec::adaptive(KernelKind::Bisquare, 3)).unwrap();
        // h = 2 (third smallest)
        assert_eq!(w, vec![1.0, 0.0, 0.5625, 0.0, 0.0]);
        assert!(kernel_weights_from_distances(&d, &KernelSpec::adaptive(KernelKind::Bisquare, 5)).is_err());
    }

    #[test]
    fn focal_weight_is_one() {
        let p = GeoPoint::new(-74.0, 40.7).unwrap();
        let q = GeoPoint::new(-73.9, 40.8).unwrap();
        let w = kernel_weights(p, &[p, q], &KernelSpec::fixed(KernelKind::Gaussian, 10.0)).unwrap();
        assert_eq!(w[0], 1.0);
        assert!(w[1] > 0.0 && w[1] < 1.0);
    }
}
