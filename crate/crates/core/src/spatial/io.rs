//! GeoJSON polygon and CSV point ingestion.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::geometry::{GeoPoint, PolygonPart, Ring, ZonePolygon};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature>,
}

#[derive(Deserialize)]
struct Feature {
    #[serde(default)]
    properties: Option<serde_json::Map<String, Value>>,
    geometry: Option<Geometry>,
}

#[derive(Deserialize)]
#[serde(tag = "type", content = "coordinates")]
enum Geometry {
    Polygon(Vec<Vec<Vec<f64>>>),
    MultiPolygon(Vec<Vec<Vec<Vec<f64>>>>),
}

fn ring(coords: Vec<Vec<f64>>) -> std::result::Result<Ring, String> {
    coords
        .into_iter()
        .map(|c| match c.as_slice() {
            [x, y, ..] => Ok((*x, *y)),
            _ => Err("position with fewer than two coordinates".to_string()),
        })
        .collect()
}

fn part(rings: Vec<Vec<Vec<f64>>>) -> std::result::Result<PolygonPart, String> {
    let mut rings = rings.into_iter().map(ring);
    let exterior = rings.next().ok_or("polygon without rings")??;
    Ok(PolygonPart {
        exterior,
        holes: rings.collect::<std::result::Result<_, _>>()?,
    })
}

/// Parses a GeoJSON FeatureCollection of Polygon/MultiPolygon features, reading the
/// zone id from `id_property` (string or number).
pub fn parse_polygons(text: &str, id_property: &str, origin: &Path) -> Result<Vec<ZonePolygon>> {
    let fc: FeatureCollection = serde_json::from_str(text).map_err(|e| Error::parse(origin, e))?;
    if fc.kind != "FeatureCollection" {
        return Err(Error::parse(origin, format!("expected a FeatureCollection, found {}", fc.kind)));
    }
    let mut out = Vec::with_capacity(fc.features.len());
    for (k, f) in fc.features.into_iter().enumerate() {
        let id = match f.properties.as_ref().and_then(|p| p.get(id_property)) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => {
                return Err(Error::parse(origin, format!("feature {k} lacks property `{id_property}`")));
            }
        };
        let parts = match f.geometry {
            Some(Geometry::Polygon(r)) => vec![part(r)],
            Some(Geometry::MultiPolygon(ps)) => ps.into_iter().map(part).collect(),
            None => return Err(Error::parse(origin, format!("feature `{id}` has no geometry"))),
        }
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|m| Error::parse(origin, format!("feature `{id}`: {m}")))?;
        out.push(ZonePolygon::multi(id, parts)?);
    }
    Ok(out)
}

pub fn read_polygons(path: &Path, id_property: &str) -> Result<Vec<ZonePolygon>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_polygons(&text, id_property, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdPoint {
    pub id: String,
    pub point: GeoPoint,
}

#[derive(Deserialize)]
struct PointRow {
    id: String,
    longitude: f64,
    latitude: f64,
}

/// Reads an `id,longitude,latitude` CSV.
pub fn read_points_from<R: std::io::Read>(reader: R, origin: &Path) -> Result<Vec<IdPoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (line, rec) in rdr.deserialize::<PointRow>().enumerate() {
        let row = rec.map_err(|e| Error::parse(origin, e))?;
        let point = GeoPoint::new(row.longitude, row.latitude)
            .map_err(|e| Error::parse(origin, format!("row {}: {e}", line + 2)))?;
        out.push(IdPoint { id: row.id, point });
    }
    Ok(out)
}

pub fn read_points(path: &Path) -> Result<Vec<IdPoint>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_points_from(f, path)
}
