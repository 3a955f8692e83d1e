use std::collections::BTreeMap;

use serde::Serialize;

use super::table::{GeoLevel, GeoTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregated {
    pub table: GeoTable,
    /// Assigned tracts absent from the value table.
    pub unmatched_tracts: Vec<String>,
    pub warnings: Vec<String>,
}

/// Population-weighted mean of each column over the tracts assigned to a ZCTA.
///
/// Missing tract values are left out of that column's mean. A population column,
/// if declared, is summed. When the contributing population is zero the mean is
/// unweighted and a warning is recorded.
pub fn aggregate_to_zcta(
    table: &GeoTable,
    assignment: &BTreeMap<String, String>,
    weights: &BTreeMap<String, f64>,
) -> Result<Aggregated> {
    if table.level == GeoLevel::Zcta {
        return Err(Error::invalid("table is already at the ZCTA level"));
    }
    let mut members: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut unmatched_tracts = Vec::new();
    for (tract, zcta) in assignment {
        if table.rows.contains_key(tract) {
            members.entry(zcta).or_default().push(tract);
        } else {
            unmatched_tracts.push(tract.clone());
        }
    }
    let pop_col = table.population_column.as_deref().and_then(|c| table.column_index(c));
    let mut out = GeoTable::new(GeoLevel::Zcta, table.columns.clone());
    out.population_column = table.population_column.clone();
    let mut warnings = Vec::new();
    for (zcta, tracts) in members {
        let mut pops = Vec::with_capacity(tracts.len());
        for t in &tracts {
            let p = *weights
                .get(*t)
                .ok_or_else(|| Error::invalid(format!("tract {t} has no population weight")))?;
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::invalid(format!("tract {t} has invalid population {p}")));
            }
            pops.push(p);
        }
        let mut values = Vec::with_capacity(table.columns.len());
        let mut fell_back = false;
        for (j, _) in table.columns.iter().enumerate() {
            let present: Vec<(f64, f64)> = tracts
                .iter()
                .zip(&pops)
                .filter_map(|(t, &p)| table.rows[*t][j].map(|v| (v, p)))
                .collect();
            if present.is_empty() {
                values.push(None);
                continue;
            }
            if Some(j) == pop_col {
                values.push(Some(present.iter().map(|(v, _)| v).sum()));
                continue;
            }
            let total: f64 = present.iter().map(|(_, p)| p).sum();
            let v = if total > 0.0 {
                present.iter().map(|(v, p)| v * p).sum::<f64>() / total
            } else {
                fell_back = true;
                present.iter().map(|(v, _)| v).sum::<f64>() / present.len() as f64
            };
            values.push(Some(v));
        }
        if fell_back {
            warnings.push(format!("zcta {zcta}: contributing tracts have zero population; used unweighted mean"));
        }
        out.insert(zcta, values)?;
    }
    Ok(Aggregated { table: out, unmatched_tracts, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tract_table(rows: &[(&str, f64)]) -> GeoTable {
        let mut t = GeoTable::new(GeoLevel::Tract, vec!["v".into()]);
        for (id, v) in rows {
            t.insert(*id, vec![Some(*v)]).unwrap();
        }
        t
    }

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn weighted_mean_closed_form() {
        let t = tract_table(&[("a", 10.0), ("b", 20.0)]);
        let w = [("a".to_string(), 1000.0), ("b".to_string(), 3000.0)].into_iter().collect();
        let agg = aggregate_to_zcta(&t, &map(&[("a", "z"), ("b", "z")]), &w).unwrap();
        assert_eq!(agg.table.value("z", "v"), Some(17.5));
    }

    #[test]
    fn single_tract_passes_through_and_missing_tract_reported() {
        let t = tract_table(&[("a", 4.25)]);
        let w = [("a".to_string(), 10.0)].into_iter().collect();
        let agg = aggregate_to_zcta(&t, &map(&[("a", "z"), ("gone", "z")]), &w).unwrap();
        assert_eq!(agg.table.value("z", "v"), Some(4.25));
        assert_eq!(agg.unmatched_tracts, vec!["gone".to_string()]);
    }

    #[test]
    fn zero_population_falls_back() {
        let t = tract_table(&[("a", 1.0), ("b", 3.0)]);
        let w = [("a".to_string(), 0.0), ("b".to_string(), 0.0)].into_iter().collect();
        let agg = aggregate_to_zcta(&t, &map(&[("a", "z"), ("b", "z")]), &w).unwrap();
        assert_eq!(agg.table.value("z", "v"), Some(2.0));
        assert_eq!(agg.warnings.len(), 1);
    }
}
