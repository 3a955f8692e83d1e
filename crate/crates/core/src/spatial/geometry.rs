use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in statute miles.
pub const EARTH_RADIUS_MILES: f64 = 3958.8;

/// A longitude/latitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub longitude: f64,
    pub latitude: f64,
}

impl GeoPoint {
    pub fn new(longitude: f64, latitude: f64) -> Result<Self> {
        if !longitude.is_finite() || !latitude.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite coordinate ({longitude}, {latitude})"
            )));
        }
        if !(-180.0..=180.0).contains(&longitude) || !(-90.0..=90.0).contains(&latitude) {
            return Err(Error::invalid(format!(
                "coordinate out of range ({longitude}, {latitude})"
            )));
        }
        Ok(Self {
            longitude,
            latitude,
        })
    }
}

/// Great-circle distance in miles between two points (haversine formula).
pub fn haversine_miles(a: GeoPoint, b: GeoPoint) -> Result<f64> {
    if ![a.longitude, a.latitude, b.longitude, b.latitude]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::invalid("non-finite coordinate in distance"));
    }
    Ok(haversine_unchecked(a, b))
}

#[inline]
pub(crate) fn haversine_unchecked(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.longitude - a.longitude).to_radians();
    let h = (dlat * 0.5).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon * 0.5).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().min(1.0).asin()
}

pub type Ring = Vec<(f64, f64)>;

/// One polygon part: an exterior ring plus zero or more holes, vertices as (lon, lat).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonPart {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

/// A zone's geometry. Most zones have a single part; multipart zones
/// (islands, split ZCTAs) carry one [`PolygonPart`] per piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePolygon {
    pub zone_id: String,
    pub parts: Vec<PolygonPart>,
}

impl ZonePolygon {
    /// Single-part polygon from `rings`: the first is the exterior, the rest are holes.
    pub fn new(zone_id: impl Into<String>, rings: Vec<Ring>) -> Result<Self> {
        let zone_id = zone_id.into();
        let mut rings = rings.into_iter();
        let exterior = rings.next().ok_or_else(|| Error::InvalidGeometry {
            zone: zone_id.clone(),
            reason: "polygon has no rings".into(),
        })?;
        Self::multi(
            zone_id,
            vec![PolygonPart {
                exterior,
                holes: rings.collect(),
            }],
        )
    }

    pub fn multi(zone_id: impl Into<String>, parts: Vec<PolygonPart>) -> Result<Self> {
        let poly = Self {
            zone_id: zone_id.into(),
            parts,
        };
        poly.validate()?;
        Ok(poly)
    }

    /// Closed ring with at least four vertices and finite coordinates.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidGeometry {
            zone: self.zone_id.clone(),
            reason: reason.to_string(),
        };
        if self.parts.is_empty() {
            return Err(bad("polygon has no parts"));
        }
        for ring in self.rings() {
            if ring.len() < 4 {
                return Err(bad("degenerate ring with fewer than 4 vertices"));
            }
            if ring.first() != ring.last() {
                return Err(bad("ring is not closed (first vertex != last vertex)"));
            }
            if ring.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(bad("non-finite coordinate"));
            }
        }
        Ok(())
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.parts
            .iter()
            .flat_map(|p| std::iter::once(&p.exterior).chain(p.holes.iter()))
    }

    pub fn vertices(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rings().flat_map(|r| r.iter().copied())
    }
}

/// Signed shoelace area and first moments (∑ for centroid) of a closed ring.
fn ring_moments(ring: &Ring) -> (f64, f64, f64) {
    // shift to the first vertex to limit cancellation at large coordinates
    let (ox, oy) = ring[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for w in ring.windows(2) {
        let (x0, y0) = (w[0].0 - ox, w[0].1 - oy);
        let (x1, y1) = (w[1].0 - ox, w[1].1 - oy);
        let cross = x0 * y1 - x1 * y0;
        a += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    let area = 0.5 * a;
    // moments about the origin: shift back by area * offset
    (area, cx / 6.0 + area * ox, cy / 6.0 + area * oy)
}

/// Area-weighted planar centroid in lon/lat space; holes are subtracted.
pub fn polygon_centroid(p: &ZonePolygon) -> Result<GeoPoint> {
    p.validate()?;
    let (mut area, mut mx, mut my) = (0.0, 0.0, 0.0);
    for part in &p.parts {
        let (a, x, y) = ring_moments(&part.exterior);
        let s = a.signum();
        area += a * s;
        mx += x * s;
        my += y * s;
        for hole in &part.holes {
            let (a, x, y) = ring_moments(hole);
            let s = a.signum();
            area -= a * s;
            mx -= x * s;
            my -= y * s;
        }
    }
    if area.abs() <= f64::EPSILON * 16.0 {
        return Err(Error::InvalidGeometry {
            zone: p.zone_id.clone(),
            reason: "polygon has zero area".into(),
        });
    }
    Ok(GeoPoint {
        longitude: mx / area,
        latitude: my / area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Ring {
        vec![(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s), (x0, y0)]
    }

    #[test]
    fn unit_square_centroid() {
        let p = ZonePolygon::new("a", vec![square(0.0, 0.0, 1.0)]).unwrap();
        let c = polygon_centroid(&p).unwrap();
        assert_eq!((c.longitude, c.latitude), (0.5, 0.5));
    }

    #[test]
    fn clockwise_ring_gives_same_centroid() {
        let mut ring = square(2.0, 3.0, 2.0);
        ring.reverse();
        let c = polygon_centroid(&ZonePolygon::new("a", vec![ring]).unwrap()).unwrap();
        assert!((c.longitude - 3.0).abs() < 1e-14 && (c.latitude - 4.0).abs() < 1e-14);
    }

    #[test]
    fn centered_hole_keeps_center() {
        let p = ZonePolygon::new("a", vec![square(0.0, 0.0, 4.0), square(1.0, 1.0, 2.0)]).unwrap();
        let c = polygon_centroid(&p).unwrap();
        assert!((c.longitude - 2.0).abs() < 1e-14 && (c.latitude - 2.0).abs() < 1e-14);
    }

    #[test]
    fn l_shape_matches_rectangle_decomposition() {
        // L = [0,2]x[0,1] ∪ [0,1]x[1,2]; areas 2 and 1
        let ring = vec![(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0), (0.0, 0.0)];
        let c = polygon_centroid(&ZonePolygon::new("l", vec![ring]).unwrap()).unwrap();
        let ex = (2.0 * 1.0 + 1.0 * 0.5) / 3.0;
        let ey = (2.0 * 0.5 + 1.0 * 1.5) / 3.0;
        assert!((c.longitude - ex).abs() < 1e-14);
        assert!((c.latitude - ey).abs() < 1e-14);
    }

    #[test]
    fn degenerate_and_zero_area_rejected() {
        let err = ZonePolygon::new("z9", vec![vec![(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]]).unwrap_err();
        assert!(err.to_string().contains("z9"));
        let flat = ZonePolygon::new("f", vec![vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (0.0, 0.0)]]).unwrap();
        assert!(polygon_centroid(&flat).is_err());
    }

    #[test]
    fn haversine_closed_forms() {
        let o = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(haversine_miles(o, o).unwrap(), 0.0);
        let d = haversine_miles(o, GeoPoint::new(0.0, 1.0).unwrap()).unwrap();
        assert!((d - EARTH_RADIUS_MILES * std::f64::consts::PI / 180.0).abs() < 1e-9);
        let nan = GeoPoint { longitude: f64::NAN, latitude: 0.0 };
        assert!(haversine_miles(nan, o).is_err());
        assert!(GeoPoint::new(181.0, 0.0).is_err());
    }
}
