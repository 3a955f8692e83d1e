use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;

use super::table::{GeoLevel, GeoTable};
use crate::error::{Error, Result};
use crate::estimators::ModelFrame;
use crate::spatial::{polygon_centroid, ZonePolygon};
use crate::transforms::{boxcox, boxcox_mle, zscore, BoxCoxEstimate, BoxCoxSpec, StandardizationParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssemblyReport {
    pub rows_in: usize,
    pub rows_dropped_missing: usize,
    pub rows_out: usize,
    pub unmatched_tracts: Vec<String>,
    pub island_zones: Vec<String>,
    pub threshold_used: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub frame: ModelFrame,
    pub report: AssemblyReport,
    pub boxcox: BoxCoxSpec,
    pub boxcox_estimate: BoxCoxEstimate,
    pub standardization: StandardizationParams,
    pub warnings: Vec<String>,
}

/// Finds the single table holding `column`.
fn locate<'t>(tables: &'t [GeoTable], column: &str, role: &str) -> Result<(&'t GeoTable, usize)> {
    let hits: Vec<_> = tables
        .iter()
        .filter_map(|t| t.column_index(column).map(|j| (t, j)))
        .collect();
    match hits.as_slice() {
        [one] => Ok(*one),
        [] => Err(Error::invalid(format!("{role} column `{column}` not found in any table"))),
        _ => Err(Error::invalid(format!("{role} column `{column}` appears in {} tables", hits.len()))),
    }
}

/// Joins ZCTA-level tables, drops rows with any missing target/predictor,
/// Box-Cox transforms the target (λ by maximum likelihood) and z-scores predictors.
/// Rows are ordered by zone id.
pub fn assemble_frame(
    tables: &[GeoTable],
    target: &str,
    predictors: &[String],
    polygons: &[ZonePolygon],
    boxcox_offset: f64,
) -> Result<Assembled> {
    if tables.iter().any(|t| t.level != GeoLevel::Zcta) {
        return Err(Error::invalid("all tables must be aggregated to the ZCTA level before assembly"));
    }
    if predictors.is_empty() {
        return Err(Error::invalid("no predictor columns given"));
    }
    let target_src = locate(tables, target, "target")?;
    let pred_src = predictors
        .iter()
        .map(|p| locate(tables, p, "predictor"))
        .collect::<Result<Vec<_>>>()?;

    let all_ids: BTreeSet<&String> = tables.iter().flat_map(|t| t.rows.keys()).collect();
    let rows_in = all_ids.len();
    let get = |(t, j): (&GeoTable, usize), id: &str| t.rows.get(id).and_then(|r| r[j]);

    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut xs = Vec::new();
    for id in all_ids {
        let Some(target_value) = get(target_src, id) else { continue };
        let Some(row) = pred_src.iter().map(|&s| get(s, id)).collect::<Option<Vec<f64>>>() else {
            continue;
        };
        ids.push(id.clone());
        y.push(target_value);
        xs.extend(row);
    }
    let rows_out = ids.len();
    if rows_out == 0 {
        return Err(Error::invalid("no complete rows remain after listwise deletion"));
    }

    let by_id: BTreeMap<&str, &ZonePolygon> = polygons.iter().map(|p| (p.zone_id.as_str(), p)).collect();
    let centroids = ids
        .iter()
        .map(|id| {
            let poly = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::invalid(format!("zone {id} has no polygon")))?;
            polygon_centroid(poly)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    let estimate = boxcox_mle(&y, boxcox_offset)?;
    if estimate.at_bound {
        warnings.push(format!("Box-Cox lambda {:.6} is at the search boundary", estimate.lambda));
    }
    let spec = BoxCoxSpec { lambda: estimate.lambda, offset: boxcox_offset };
    let y = boxcox(&y, &spec)?;

    let x = DMatrix::from_row_slice(rows_out, predictors.len(), &xs);
    let (x, standardization) = zscore(&x, predictors)?;
    let frame = ModelFrame::new(ids, y, x, predictors.to_vec(), centroids)?;
    Ok(Assembled {
        frame,
        report: AssemblyReport {
            rows_in,
            rows_dropped_missing: rows_in - rows_out,
            rows_out,
            unmatched_tracts: Vec::new(),
            island_zones: Vec::new(),
            threshold_used: None,
        },
        boxcox: spec,
        boxcox_estimate: estimate,
        standardization,
        warnings,
    })
}
