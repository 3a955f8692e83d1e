use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum population share for a tract→ZCTA match.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// Share of a tract's population that lies inside a ZCTA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosswalkRow {
    pub tract_id: String,
    pub zcta_id: String,
    pub population_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub threshold: f64,
    /// tract id → zcta id
    pub assigned: BTreeMap<String, String>,
    /// Tracts whose best share falls below the threshold.
    pub unmatched: Vec<String>,
}

/// Best zcta per tract: maximal share, ties to the lexicographically smallest zcta id.
fn best_per_tract(rows: &[CrosswalkRow]) -> Result<BTreeMap<&str, (&str, f64)>> {
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    let mut best: BTreeMap<&str, (&str, f64)> = BTreeMap::new();
    for r in rows {
        if !(0.0..=1.0).contains(&r.population_share) {
            return Err(Error::invalid(format!(
                "crosswalk share {} for tract {} / zcta {} is outside [0, 1]",
                r.population_share, r.tract_id, r.zcta_id
            )));
        }
        *totals.entry(&r.tract_id).or_default() += r.population_share;
        best.entry(&r.tract_id)
            .and_modify(|b| {
                if r.population_share > b.1 || (r.population_share == b.1 && r.zcta_id.as_str() < b.0) {
                    *b = (&r.zcta_id, r.population_share);
                }
            })
            .or_insert((&r.zcta_id, r.population_share));
    }
    if let Some((t, s)) = totals.iter().find(|(_, &s)| s > 1.0 + 1e-6) {
        return Err(Error::invalid(format!("crosswalk shares for tract {t} sum to {s} > 1")));
    }
    Ok(best)
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold {threshold} is outside [0, 1]")));
    }
    Ok(())
}

/// Assigns each tract to the ZCTA holding the largest share of its population,
/// provided that share is at least `threshold`.
pub fn crosswalk_assign(rows: &[CrosswalkRow], threshold: f64) -> Result<Assignment> {
    check_threshold(threshold)?;
    let best = best_per_tract(rows)?;
    let mut assigned = BTreeMap::new();
    let mut unmatched = Vec::new();
    for (tract, (zcta, share)) in best {
        if share >= threshold {
            assigned.insert(tract.to_string(), zcta.to_string());
        } else {
            unmatched.push(tract.to_string());
        }
    }
    Ok(Assignment { threshold, assigned, unmatched })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdCount {
    pub threshold: f64,
    /// Distinct ZCTAs receiving at least one tract.
    pub matched_zctas: usize,
}

/// Distinct matched ZCTAs at each threshold (ascending thresholds).
pub fn threshold_sensitivity(rows: &[CrosswalkRow], thresholds: &[f64]) -> Result<Vec<ThresholdCount>> {
    for t in thresholds {
        check_threshold(*t)?;
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("thresholds must be sorted ascending"));
    }
    let best = best_per_tract(rows)?;
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let zctas: BTreeSet<&str> = best.values().filter(|b| b.1 >= threshold).map(|b| b.0).collect();
            ThresholdCount { threshold, matched_zctas: zctas.len() }
        })
        .collect())
}

pub fn read_crosswalk_from<R: std::io::Read>(reader: R, origin: &Path) -> Result<Vec<CrosswalkRow>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .deserialize()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| Error::parse(origin, format!("row {}: {e}", k + 2))))
        .collect()
}

/// Reads a `tract_id,zcta_id,population_share` CSV.
pub fn read_crosswalk(path: &Path) -> Result<Vec<CrosswalkRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_crosswalk_from(f, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: &str, z: &str, s: f64) -> CrosswalkRow {
        CrosswalkRow { tract_id: t.into(), zcta_id: z.into(), population_share: s }
    }

    #[test]
    fn examples() {
        let a = crosswalk_assign(&[row("t1", "z1", 1.0)], 0.2).unwrap();
        assert_eq!(a.assigned["t1"], "z1");
        let a = crosswalk_assign(&[row("t1", "z1", 0.55), row("t1", "z2", 0.45)], 0.2).unwrap();
        assert_eq!(a.assigned["t1"], "z1");
        let a = crosswalk_assign(&[row("t", "z1", 0.15), row("t", "z2", 0.15), row("t", "z3", 0.70)], 0.8).unwrap();
        assert!(a.assigned.is_empty());
        assert_eq!(a.unmatched, vec!["t".to_string()]);
    }

    #[test]
    fn ties_go_to_smallest_zcta() {
        let a = crosswalk_assign(&[row("t", "z9", 0.5), row("t", "z2", 0.5)], 0.2).unwrap();
        assert_eq!(a.assigned["t"], "z2");
    }

    #[test]
    fn malformed_shares_rejected() {
        assert!(crosswalk_assign(&[row("t", "z", -0.1)], 0.2).is_err());
        assert!(crosswalk_assign(&[row("t", "z", 1.2)], 0.2).is_err());
        assert!(crosswalk_assign(&[row("t", "a", 0.7), row("t", "b", 0.7)], 0.2).is_err());
        assert!(crosswalk_assign(&[row("t", "a", 0.7)], 1.5).is_err());
    }

    #[test]
    fn full_overlap_flat_curve() {
        let rows = vec![row("t1", "z1", 1.0), row("t2", "z2", 1.0)];
        let c = threshold_sensitivity(&rows, &[0.0, 1.0]).unwrap();
        assert_eq!(c[0].matched_zctas, 2);
        assert_eq!(c[1].matched_zctas, 2);
        assert!(threshold_sensitivity(&rows, &[0.5, 0.1]).is_err());
    }
}
