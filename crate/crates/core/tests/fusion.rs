mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use spatreg::estimators::ModelSpec;
use spatreg::fusion::{
    aggregate_to_zcta, assemble_frame, crosswalk_assign, radius_sweep, read_crosswalk_from, read_table_from,
    threshold_sensitivity, CrosswalkRow, GeoLevel, GeoTable,
};
use spatreg::spatial::{GeoPoint, ZonePolygon};

fn row(t: &str, z: &str, s: f64) -> CrosswalkRow {
    CrosswalkRow { tract_id: t.into(), zcta_id: z.into(), population_share: s }
}

#[test]
fn crosswalk_reference_cases() {
    let a = crosswalk_assign(&[row("t", "z1", 1.0)], 0.2).unwrap();
    assert_eq!(a.assigned["t"], "z1");
    let a = crosswalk_assign(&[row("t", "z1", 0.55), row("t", "z2", 0.45)], 0.2).unwrap();
    assert_eq!(a.assigned["t"], "z1");
    let rows = [row("t", "z1", 0.15), row("t", "z2", 0.15), row("t", "z3", 0.70)];
    let a = crosswalk_assign(&rows, 0.8).unwrap();
    assert!(a.assigned.is_empty());
    assert_eq!(a.unmatched, ["t"]);
    // exactly at the threshold counts as matched
    assert_eq!(crosswalk_assign(&rows, 0.7).unwrap().assigned["t"], "z3");

    assert!(crosswalk_assign(&[row("t", "z", 1.2)], 0.2).is_err());
    assert!(crosswalk_assign(&[row("t", "a", 0.7), row("t", "b", 0.7)], 0.2).is_err());
    assert!(crosswalk_assign(&rows, 1.5).is_err());
    assert!(threshold_sensitivity(&rows, &[0.5, 0.1]).is_err());
}

#[test]
fn crosswalk_csv_round_trip() {
    let text = "tract_id,zcta_id,population_share\n36001000100, 12203 ,0.9\n36001000100,12204,0.1\n";
    let rows = read_crosswalk_from(text.as_bytes(), Path::new("cw.csv")).unwrap();
    assert_eq!(rows[0], row("36001000100", "12203", 0.9));
    let bad = "tract_id,zcta_id,population_share\n1,2,abc\n";
    let err = read_crosswalk_from(bad.as_bytes(), Path::new("cw.csv")).unwrap_err().to_string();
    assert!(err.contains("cw.csv") && err.contains("row 2"), "{err}");
}

#[test]
fn aggregate_matches_direct_weighted_means() {
    let mut r = rng(77);
    let mut table = GeoTable::new(GeoLevel::Tract, vec!["a".into(), "b".into(), "pop".into()]);
    let mut assignment = BTreeMap::new();
    let mut weights = BTreeMap::new();
    let mut truth: BTreeMap<String, Vec<(f64, f64, Option<f64>)>> = BTreeMap::new();
    for t in 0..200 {
        let id = format!("t{t:03}");
        let z = format!("z{}", r.random_range(0..20));
        let pop = r.random_range(100.0..8000.0_f64).round();
        let a = r.random_range(-50.0..50.0);
        let b = (r.random::<f64>() > 0.1).then(|| r.random_range(0.0..1.0));
        table.insert(&id, vec![Some(a), b, Some(pop)]).unwrap();
        assignment.insert(id.clone(), z.clone());
        weights.insert(id, pop);
        truth.entry(z).or_default().push((pop, a, b));
    }
    let table = table.with_population_column("pop").unwrap();
    let agg = aggregate_to_zcta(&table, &assignment, &weights).unwrap();
    assert!(agg.unmatched_tracts.is_empty());
    assert_eq!(agg.table.level, GeoLevel::Zcta);
    for (z, members) in &truth {
        let pa: f64 = members.iter().map(|m| m.0).sum();
        let a = members.iter().map(|m| m.0 * m.1).sum::<f64>() / pa;
        let with_b: Vec<_> = members.iter().filter_map(|m| m.2.map(|b| (m.0, b))).collect();
        let b = with_b.iter().map(|(p, b)| p * b).sum::<f64>() / with_b.iter().map(|m| m.0).sum::<f64>();
        assert!((agg.table.value(z, "a").unwrap() - a).abs() < 1e-10);
        if with_b.is_empty() {
            assert_eq!(agg.table.value(z, "b"), None);
        } else {
            assert!((agg.table.value(z, "b").unwrap() - b).abs() < 1e-10);
        }
        assert!((agg.table.value(z, "pop").unwrap() - pa).abs() < 1e-6);
        let (lo, hi) = members.iter().fold((f64::MAX, f64::MIN), |(l, h), m| (l.min(m.1), h.max(m.1)));
        let v = agg.table.value(z, "a").unwrap();
        assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }
}

#[test]
fn aggregate_reports_missing_tracts() {
    let mut table = GeoTable::new(GeoLevel::Tract, vec!["v".into()]);
    table.insert("t1", vec![Some(3.0)]).unwrap();
    let assignment: BTreeMap<_, _> =
        [("t1", "z"), ("t2", "z")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let weights: BTreeMap<_, _> = [("t1".to_string(), 10.0)].into_iter().collect();
    let agg = aggregate_to_zcta(&table, &assignment, &weights).unwrap();
    assert_eq!(agg.unmatched_tracts, ["t2"]);
    assert_eq!(agg.table.value("z", "v"), Some(3.0));
}

fn squares(ids: &[String]) -> Vec<ZonePolygon> {
    ids.iter()
        .enumerate()
        .map(|(k, id)| {
            let (x0, y0) = (-90.0 + (k % 10) as f64 * 0.1, 35.0 + (k / 10) as f64 * 0.1);
            let ring = vec![(x0, y0), (x0 + 0.1, y0), (x0 + 0.1, y0 + 0.1), (x0, y0 + 0.1), (x0, y0)];
            ZonePolygon::new(id.clone(), vec![ring]).unwrap()
        })
        .collect()
}

fn zcta_tables(n: usize, seed: u64, missing: &[usize]) -> (Vec<GeoTable>, Vec<String>) {
    let mut r = rng(seed);
    let ids: Vec<String> = (0..n).map(|k| format!("{:05}", 10000 + k)).collect();
    let mut target = GeoTable::new(GeoLevel::Zcta, vec!["ev".into()]);
    let mut preds = GeoTable::new(GeoLevel::Zcta, vec!["income".into(), "age".into()]);
    for (k, id) in ids.iter().enumerate() {
        target.insert(id, vec![Some(r.random_range(0.5..30.0))]).unwrap();
        let income = (!missing.contains(&k)).then(|| r.random_range(20_000.0..150_000.0));
        preds.insert(id, vec![income, Some(r.random_range(25.0..60.0))]).unwrap();
    }
    (vec![target, preds], ids)
}

#[test]
fn assembly_drops_incomplete_rows_and_standardizes() {
    let predictors = vec!["income".to_string(), "age".to_string()];
    let (tables, ids) = zcta_tables(50, 3, &[]);
    let polys = squares(&ids);
    let a = assemble_frame(&tables, "ev", &predictors, &polys, 1.0).unwrap();
    assert_eq!((a.report.rows_in, a.report.rows_out, a.report.rows_dropped_missing), (50, 50, 0));
    let n = a.frame.n() as f64;
    for col in a.frame.x().column_iter() {
        let m = col.sum() / n;
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }

    let (tables, ids) = zcta_tables(50, 3, &[4, 17]);
    let a = assemble_frame(&tables, "ev", &predictors, &squares(&ids), 1.0).unwrap();
    assert_eq!((a.report.rows_in, a.report.rows_out, a.report.rows_dropped_missing), (50, 48, 2));
    assert!(!a.frame.zone_ids().contains(&ids[4]));

    // table order and polygon order do not matter
    let mut shuffled = polys.clone();
    shuffled.shuffle(&mut rng(1));
    let (mut tables, _) = zcta_tables(50, 3, &[]);
    tables.reverse();
    let b = assemble_frame(&tables, "ev", &predictors, &shuffled, 1.0).unwrap();
    let (tables, _) = zcta_tables(50, 3, &[]);
    let a = assemble_frame(&tables, "ev", &predictors, &polys, 1.0).unwrap();
    assert_eq!(a.frame.zone_ids(), b.frame.zone_ids());
    assert_eq!(a.frame.y(), b.frame.y());
    assert_eq!(a.frame.x(), b.frame.x());
    assert_eq!(a.frame.centroids(), b.frame.centroids());
}

#[test]
fn assembly_errors_are_specific() {
    let predictors = vec!["income".to_string()];
    let (tables, ids) = zcta_tables(10, 9, &[]);
    let polys = squares(&ids);
    let e = assemble_frame(&tables, "nope", &predictors, &polys, 1.0).unwrap_err().to_string();
    assert!(e.contains("nope"), "{e}");
    let e = assemble_frame(&tables, "ev", &predictors, &polys[1..], 1.0).unwrap_err().to_string();
    assert!(e.contains(&ids[0]), "{e}");
    let tract = read_table_from("id,v\n1,2\n".as_bytes(), GeoLevel::Tract, Path::new("t.csv")).unwrap();
    assert!(assemble_frame(&[tract], "v", &predictors, &polys, 1.0).is_err());
}

#[test]
fn sweep_shapes() {
    let lat = Lattice::new(8, 8);
    let mut r = rng(12);
    let x = design(&mut r, lat.n(), 2);
    let y = trend(&x, &[1.0, 1.0, 0.5]) + nalgebra::DVector::from_vec(normals(&mut r, lat.n()));
    let frame = lat.frame(y.iter().copied().collect(), &x);
    let stations: Vec<GeoPoint> = (0..150)
        .map(|_| GeoPoint::new(r.random_range(-100.0..-99.6), r.random_range(40.0..40.8)).unwrap())
        .collect();

    let one = radius_sweep(&frame, "x2", &stations, &[10.0], &[ModelSpec::Ols], &lat.w).unwrap();
    assert_eq!(one.cells.len(), 1);
    assert_eq!(one.argmin["ols"], 10.0);
    let mut csv = Vec::new();
    one.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("radius,model_kind,aic\n"));

    let dup = radius_sweep(&frame, "x2", &stations, &[10.0, 10.0], &[ModelSpec::Ols, ModelSpec::SpatialLag], &lat.w)
        .unwrap();
    assert_eq!(dup.cells.len(), 4);
    for m in ["ols", "spatial_lag"] {
        let a: Vec<_> = dup.cells.iter().filter(|c| c.model_kind == m).map(|c| c.aic.unwrap()).collect();
        assert_eq!(a[0], a[1]);
    }

    // a radius covering every station for every zone leaves a constant column
    let wide = radius_sweep(&frame, "x2", &stations, &[10.0, 3000.0], &[ModelSpec::Ols], &lat.w).unwrap();
    assert_eq!(wide.cells[1].aic, None);
    assert_eq!(wide.warnings.len(), 1);

    assert!(radius_sweep(&frame, "x9", &stations, &[10.0], &[ModelSpec::Ols], &lat.w).is_err());
    assert!(radius_sweep(&frame, "x2", &stations, &[], &[ModelSpec::Ols], &lat.w).is_err());
}
