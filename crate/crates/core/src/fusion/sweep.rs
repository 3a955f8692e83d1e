use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{fit_model, LogDet, ModelFrame, ModelSpec};
use crate::spatial::{count_within_radius, GeoPoint, WeightMatrix};
use crate::transforms::zscore;

/// Default station radii in miles.
pub const DEFAULT_RADII: [f64; 6] = [5.0, 10.0, 25.0, 50.0, 75.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub radius: f64,
    pub model_kind: &'static str,
    /// `None` when the count column is constant at this radius.
    pub aic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    /// model → radius with the lowest AIC
    pub argmin: BTreeMap<&'static str, f64>,
    pub warnings: Vec<String>,
}

impl SweepTable {
    /// `radius,model_kind,aic` CSV; unavailable cells are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "radius,model_kind,aic")?;
        for c in &self.cells {
            match c.aic {
                Some(a) => writeln!(out, "{},{},{}", c.radius, c.model_kind, a)?,
                None => writeln!(out, "{},{},", c.radius, c.model_kind)?,
            }
        }
        out.flush()
    }
}

/// Replaces `station_column` with standardized station counts within each radius
/// of the zone centroids, holding every other predictor fixed, and records the AIC
/// of each model.
pub fn radius_sweep(
    frame: &ModelFrame,
    station_column: &str,
    stations: &[GeoPoint],
    radii: &[f64],
    models: &[ModelSpec],
    w: &WeightMatrix,
) -> Result<SweepTable> {
    if radii.is_empty() {
        return Err(Error::invalid("radius list is empty"));
    }
    if frame.column_index(station_column).is_none() {
        return Err(Error::invalid(format!("station column `{station_column}` is not a predictor")));
    }
    let logdet = if models.iter().any(ModelSpec::is_spatial) { Some(LogDet::new(w)?) } else { None };
    let mut cells = Vec::with_capacity(radii.len() * models.len());
    let mut warnings = Vec::new();
    for &radius in radii {
        let counts = count_within_radius(frame.centroids(), stations, radius)?;
        let raw = DMatrix::from_iterator(counts.len(), 1, counts.iter().map(|&c| c as f64));
        let swept = match zscore(&raw, &[station_column.to_string()]) {
            Ok((z, _)) => Some(frame.with_column(station_column, z.as_slice())?),
            Err(Error::ConstantColumn(_)) => {
                warnings.push(format!("station counts are constant at radius {radius}; AIC unavailable"));
                None
            }
            Err(e) => return Err(e),
        };
        for model in models {
            let aic = match &swept {
                Some(f) => match fit_model(f, w, logdet.as_ref(), model) {
                    Ok(fit) => Some(fit.aic()),
                    Err(e @ (Error::SingularLocalDesign { .. }
                    | Error::RankDeficient(_)
                    | Error::NoInteriorMaximum { .. })) => {
                        warnings.push(format!("{} at radius {radius}: {e}; AIC unavailable", model.name()));
                        None
                    }
                    Err(e) => return Err(e),
                },
                None => None,
            };
            cells.push(SweepCell { radius, model_kind: model.name(), aic });
        }
    }
    let mut argmin: BTreeMap<&'static str, (f64, f64)> = BTreeMap::new();
    for c in &cells {
        if let Some(a) = c.aic.filter(|a| a.is_finite()) {
            let e = argmin.entry(c.model_kind).or_insert((c.radius, a));
            if a < e.1 {
                *e = (c.radius, a);
            }
        }
    }
    Ok(SweepTable {
        cells,
        argmin: argmin.into_iter().map(|(k, (r, _))| (k, r)).collect(),
        warnings,
    })
}
