use std::collections::HashMap;

use rayon::prelude::*;

use super::geometry::{haversine_unchecked, GeoPoint, EARTH_RADIUS_MILES};
use crate::error::{Error, Result};

/// Latitude/longitude bucket grid over a fixed point set.
#[derive(Debug)]
pub struct PointGrid {
    cell_deg: f64,
    lon_cells: i64,
    buckets: HashMap<(i64, i64), Vec<GeoPoint>>,
}

impl PointGrid {
    pub fn new(points: &[GeoPoint], cell_deg: f64) -> Self {
        let cell_deg = cell_deg.clamp(1e-4, 90.0);
        let lon_cells = (360.0 / cell_deg).ceil() as i64;
        let mut buckets: HashMap<(i64, i64), Vec<GeoPoint>> = HashMap::new();
        for &p in points {
            buckets.entry(Self::key(cell_deg, lon_cells, p)).or_default().push(p);
        }
        Self {
            cell_deg,
            lon_cells,
            buckets,
        }
    }

    fn key(cell_deg: f64, lon_cells: i64, p: GeoPoint) -> (i64, i64) {
        let lat = ((p.latitude + 90.0) / cell_deg).floor() as i64;
        let lon = (((p.longitude + 180.0) / cell_deg).floor() as i64).rem_euclid(lon_cells);
        (lat, lon)
    }

    /// Number of indexed points within `radius` miles (inclusive) of `center`.
    pub fn count_within(&self, center: GeoPoint, radius: f64) -> usize {
        let ang = radius / EARTH_RADIUS_MILES;
        // any point within `radius` differs in latitude by at most `ang`
        let dlat = ang.to_degrees() + 1e-9;
        let lat_lo = center.latitude - dlat;
        let lat_hi = center.latitude + dlat;
        let lon_span = if lat_lo <= -90.0 || lat_hi >= 90.0 || ang >= std::f64::consts::FRAC_PI_2 {
            None
        } else {
            let s = ang.sin() / center.latitude.to_radians().cos();
            if s >= 1.0 {
                None
            } else {
                Some(s.asin().to_degrees() + 1e-9)
            }
        };
        let row_lo = ((lat_lo.max(-90.0) + 90.0) / self.cell_deg).floor() as i64;
        let row_hi = ((lat_hi.min(90.0) + 90.0) / self.cell_deg).floor() as i64;
        let cols: Vec<i64> = match lon_span {
            Some(d) if 2.0 * d + 2.0 * self.cell_deg < 360.0 => {
                let lo = ((center.longitude - d + 180.0) / self.cell_deg).floor() as i64;
                let hi = ((center.longitude + d + 180.0) / self.cell_deg).floor() as i64;
                let mut c: Vec<i64> = (lo..=hi).map(|c| c.rem_euclid(self.lon_cells)).collect();
                c.sort_unstable();
                c.dedup();
                c
            }
            _ => (0..self.lon_cells).collect(),
        };
        let mut count = 0;
        for row in row_lo..=row_hi {
            for &col in &cols {
                if let Some(bucket) = self.buckets.get(&(row, col)) {
                    count += bucket.iter().filter(|&&p| haversine_unchecked(center, p) <= radius).count();
                }
            }
        }
        count
    }
}

/// Per-centroid count of stations within `radius` miles, boundary inclusive.
pub fn count_within_radius(centroids: &[GeoPoint], stations: &[GeoPoint], radius: f64) -> Result<Vec<usize>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    if stations.is_empty() {
        return Ok(vec![0; centroids.len()]);
    }
    let cell = (radius / EARTH_RADIUS_MILES).to_degrees();
    let grid = PointGrid::new(stations, cell);
    Ok(centroids.par_iter().map(|&c| grid.count_within(c, radius)).collect())
}
