mod common;

use std::collections::BTreeSet;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use spatreg::diagnostics::{morans_i, vif};
use spatreg::fusion::{crosswalk_assign, CrosswalkRow};
use spatreg::spatial::{haversine_miles, GeoPoint};
use spatreg::transforms::{boxcox, zscore, BoxCoxSpec};

fn point() -> impl Strategy<Value = GeoPoint> {
    (-180.0..=180.0f64, -90.0..=90.0f64).prop_map(|(lon, lat)| GeoPoint::new(lon, lat).unwrap())
}

/// Tracts with one to three ZCTA shares summing to at most 1.
fn crosswalk() -> impl Strategy<Value = Vec<CrosswalkRow>> {
    prop::collection::vec(prop::collection::vec((0usize..6, 0.0..1.0f64), 1..4), 1..25).prop_map(|tracts| {
        let mut rows = Vec::new();
        for (t, parts) in tracts.into_iter().enumerate() {
            let total: f64 = parts.iter().map(|p| p.1).sum::<f64>().max(1.0);
            let mut seen = BTreeSet::new();
            for (z, s) in parts {
                if seen.insert(z) {
                    rows.push(CrosswalkRow {
                        tract_id: format!("t{t}"),
                        zcta_id: format!("z{z}"),
                        population_share: s / total,
                    });
                }
            }
        }
        rows
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn haversine_is_a_metric(a in point(), b in point(), c in point()) {
        let ab = haversine_miles(a, b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, haversine_miles(b, a).unwrap());
        let ac = haversine_miles(a, c).unwrap();
        let cb = haversine_miles(c, b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert!(ab <= std::f64::consts::PI * 3958.8 + 1e-9);
    }

    #[test]
    fn zscore_round_trips(values in prop::collection::vec(-1e4..1e4f64, 6..40)) {
        let n = values.len() / 2;
        let x = DMatrix::from_column_slice(n, 2, &values[..2 * n]);
        prop_assume!(x.column_iter().all(|c| c.max() - c.min() > 1e-3));
        let names = vec!["a".to_string(), "b".to_string()];
        let (z, params) = zscore(&x, &names).unwrap();
        let back = params.unstandardize(&z).unwrap();
        for (u, v) in back.iter().zip(x.iter()) {
            prop_assert!((u - v).abs() <= 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn boxcox_is_continuous_at_zero(y in prop::collection::vec(0.01..1e3f64, 1..20), eps in 1e-9..1e-6f64) {
        let at = |lambda| boxcox(&y, &BoxCoxSpec { lambda, offset: 0.0 }).unwrap();
        let (lo, mid, hi) = (at(-eps), at(0.0), at(eps));
        for k in 0..y.len() {
            let tol = 1e-5 * mid[k].abs().max(1.0);
            prop_assert!((lo[k] - mid[k]).abs() < tol && (hi[k] - mid[k]).abs() < tol);
        }
    }

    #[test]
    fn boxcox_preserves_order(mut y in prop::collection::vec(0.0..1e3f64, 2..20), lambda in -2.0..2.0f64) {
        y.sort_by(f64::total_cmp);
        let t = boxcox(&y, &BoxCoxSpec { lambda, offset: 1.0 }).unwrap();
        prop_assert!(t.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn crosswalk_matches_shrink_with_threshold(rows in crosswalk(), t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = crosswalk_assign(&rows, lo).unwrap();
        let b = crosswalk_assign(&rows, hi).unwrap();
        for (tract, zcta) in &b.assigned {
            prop_assert_eq!(a.assigned.get(tract), Some(zcta));
        }
        let all = crosswalk_assign(&rows, 0.0).unwrap();
        prop_assert!(all.unmatched.is_empty());
        let tracts: BTreeSet<_> = rows.iter().map(|r| r.tract_id.clone()).collect();
        prop_assert_eq!(all.assigned.len(), tracts.len());
        prop_assert_eq!(b.assigned.len() + b.unmatched.len(), tracts.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moran_is_affine_invariant(seed in any::<u64>(), scale in 0.01..100.0f64, shift in -1e3..1e3f64) {
        let lat = Lattice::new(6, 5);
        let z = normals(&mut rng(seed), lat.n());
        let moved: Vec<f64> = z.iter().map(|v| scale * v + shift).collect();
        let a = morans_i(&z, &lat.w, 0, 0).unwrap().statistic;
        let b = morans_i(&moved, &lat.w, 0, 0).unwrap().statistic;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn vif_ignores_column_scale(seed in any::<u64>(), scales in prop::array::uniform3(0.001..1000.0f64)) {
        let mut r = rng(seed);
        let mut x = design(&mut r, 40, 3);
        let base_col = x.column(0).clone_owned();
        x.set_column(2, &(x.column(2) + base_col * 0.7));
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let before = vif(&x, &names).unwrap();
        let mut scaled = x.clone();
        for (j, s) in scales.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        let after = vif(&scaled, &names).unwrap();
        for (u, v) in before.iter().zip(&after) {
            prop_assert!(u.vif >= 1.0 - 1e-12);
            prop_assert!((u.vif - v.vif).abs() < 1e-8 * u.vif);
        }
    }
}
