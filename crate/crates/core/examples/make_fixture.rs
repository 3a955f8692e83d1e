//! Writes the bundled 50-zone fixture under `tests/fixtures/zones50`.
//!
//! Zones are a 5 × 10 grid of 0.15° squares. The target follows a spatial lag
//! process y = ρWy + 1 + 0.8·income + 0.5·stations + ε with ρ = 0.6 on the
//! row-standardized queen matrix, then is shifted to be positive. Income comes
//! from a tract table and reaches the zones through a crosswalk.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spatreg::spatial::{
    build_queen_contiguity, count_within_radius, polygon_centroid, row_standardize, GeoPoint, ZonePolygon,
};

const ROWS: usize = 5;
const COLS: usize = 10;
const CELL: f64 = 0.15;
const LON0: f64 = -76.0;
const LAT0: f64 = 42.0;
const RHO: f64 = 0.6;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/zones50");
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let zcta = |r: usize, c: usize| format!("{}", 12000 + r * COLS + c);
    let mut polygons = Vec::new();
    let mut geo = String::from("{\"type\": \"FeatureCollection\", \"features\": [\n");
    for r in 0..ROWS {
        for c in 0..COLS {
            let (x0, y0) = (LON0 + c as f64 * CELL, LAT0 + r as f64 * CELL);
            let ring = [(x0, y0), (x0 + CELL, y0), (x0 + CELL, y0 + CELL), (x0, y0 + CELL), (x0, y0)];
            let coords: Vec<String> = ring.iter().map(|(x, y)| format!("[{x:.2}, {y:.2}]")).collect();
            if !polygons.is_empty() {
                geo.push_str(",\n");
            }
            let _ = write!(
                geo,
                "{{\"type\": \"Feature\", \"properties\": {{\"zcta\": \"{}\"}}, \"geometry\": {{\"type\": \"Polygon\", \"coordinates\": [[{}]]}}}}",
                zcta(r, c),
                coords.join(", ")
            );
            let ring = ring.iter().map(|&(x, y)| ((x * 100.0).round() / 100.0, (y * 100.0).round() / 100.0)).collect();
            polygons.push(ZonePolygon::new(zcta(r, c), vec![ring]).unwrap());
        }
    }
    geo.push_str("\n]}\n");
    std::fs::write(dir.join("zcta.geojson"), geo).unwrap();

    let n = polygons.len();
    let centroids: Vec<GeoPoint> = polygons.iter().map(|p| polygon_centroid(p).unwrap()).collect();
    let mut stations = String::from("id,longitude,latitude\n");
    let mut points = Vec::new();
    for k in 0..90 {
        // clustered toward the west edge so counts vary
        let u: f64 = rng.random::<f64>();
        let lon = LON0 + COLS as f64 * CELL * u * u;
        let lat = LAT0 + ROWS as f64 * CELL * rng.random::<f64>();
        let _ = writeln!(stations, "s{k:03},{lon:.5},{lat:.5}");
        points.push(GeoPoint::new((lon * 1e5).round() / 1e5, (lat * 1e5).round() / 1e5).unwrap());
    }
    std::fs::write(dir.join("stations.csv"), stations).unwrap();
    let counts = count_within_radius(&centroids, &points, 10.0).unwrap();

    // Two equal-population tracts per zone, symmetric around the zone income.
    let mut tracts = String::from("tract_id,median_income,population\n");
    let mut crosswalk = String::from("tract_id,zcta_id,population_share\n");
    let mut income = Vec::with_capacity(n);
    let mut t = 0;
    for (z, poly) in polygons.iter().enumerate() {
        let level = 55.0 + 12.0 * normal(&mut rng);
        income.push(level);
        let spread = 3.0 * rng.random::<f64>();
        for v in [level - spread, level + spread] {
            let id = format!("36001{t:06}");
            let _ = writeln!(tracts, "{id},{v:.6},4000");
            if t % 3 == 0 {
                let other = &polygons[(z + 1) % n].zone_id;
                let _ = writeln!(crosswalk, "{id},{},0.85", poly.zone_id);
                let _ = writeln!(crosswalk, "{id},{other},0.15");
            } else {
                let _ = writeln!(crosswalk, "{id},{},1.0", poly.zone_id);
            }
            t += 1;
        }
    }
    // Tracts too thinly spread to clear the 20% threshold.
    for k in 0..4 {
        let id = format!("36001{:06}", 900 + k);
        let _ = writeln!(tracts, "{id},70.0,1000");
        for j in 0..6 {
            let _ = writeln!(crosswalk, "{id},{},0.15", polygons[(k * 7 + j) % n].zone_id);
        }
    }
    std::fs::write(dir.join("tracts.csv"), tracts).unwrap();
    std::fs::write(dir.join("crosswalk.csv"), crosswalk).unwrap();

    let (w, _) = row_standardize(&build_queen_contiguity(&polygons).unwrap()).unwrap();
    let a = DMatrix::identity(n, n) - w.to_dense() * RHO;
    let mean_count = counts.iter().sum::<usize>() as f64 / n as f64;
    let rhs = DVector::from_fn(n, |i, _| {
        1.0 + 0.8 * (income[i] - 55.0) / 12.0 + 0.5 * (counts[i] as f64 - mean_count) / 5.0 + normal(&mut rng)
    });
    let y = a.lu().solve(&rhs).unwrap();
    let mut target = String::from("zcta,ev_per_1000\n");
    for (poly, v) in polygons.iter().zip(y.iter()) {
        let _ = writeln!(target, "{},{:.6}", poly.zone_id, 10.0 + 2.0 * v);
    }
    // A zone with no target value, dropped by listwise deletion.
    let _ = writeln!(target, "12999,NA");
    std::fs::write(dir.join("ev.csv"), target).unwrap();
    println!("wrote fixture to {}", dir.display());
}
