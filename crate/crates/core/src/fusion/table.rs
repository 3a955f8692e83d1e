use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoLevel {
    Zcta,
    Tract,
    Cbg,
}

/// Named numeric columns keyed by geographic id. `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoTable {
    pub level: GeoLevel,
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<Option<f64>>>,
    /// Column holding population counts, if any.
    pub population_column: Option<String>,
}

impl GeoTable {
    pub fn new(level: GeoLevel, columns: Vec<String>) -> Self {
        Self { level, columns, rows: BTreeMap::new(), population_column: None }
    }

    pub fn insert(&mut self, id: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let id = id.into();
        if values.len() != self.columns.len() {
            return Err(Error::DimensionMismatch { expected: self.columns.len(), got: values.len() });
        }
        if self.rows.insert(id.clone(), values).is_some() {
            return Err(Error::invalid(format!("duplicate geographic id `{id}`")));
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, id: &str, column: &str) -> Option<f64> {
        let j = self.column_index(column)?;
        self.rows.get(id)?[j]
    }

    /// id → population, for rows where it is present.
    pub fn population(&self) -> Option<BTreeMap<String, f64>> {
        let j = self.column_index(self.population_column.as_deref()?)?;
        Some(
            self.rows
                .iter()
                .filter_map(|(id, v)| v[j].map(|p| (id.clone(), p)))
                .collect(),
        )
    }

    pub fn with_population_column(mut self, name: &str) -> Result<Self> {
        if self.column_index(name).is_none() {
            return Err(Error::invalid(format!("population column `{name}` not in table")));
        }
        self.population_column = Some(name.to_string());
        Ok(self)
    }
}

fn parse_cell(cell: &str) -> std::result::Result<Option<f64>, String> {
    match cell {
        "" | "NA" | "na" | "NaN" | "nan" | "null" | "NULL" => Ok(None),
        s => s
            .parse::<f64>()
            .map(|v| v.is_finite().then_some(v))
            .map_err(|_| format!("non-numeric value `{s}`")),
    }
}

/// CSV with a one-line header whose first column is the geographic id.
/// Empty cells and NA/NaN/null are missing values.
pub fn read_table_from<R: std::io::Read>(reader: R, level: GeoLevel, origin: &Path) -> Result<GeoTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::parse(origin, e))?.clone();
    if header.len() < 2 {
        return Err(Error::parse(origin, "table needs an id column and at least one value column"));
    }
    let mut table = GeoTable::new(level, header.iter().skip(1).map(str::to_string).collect());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(origin, e))?;
        let line = k + 2;
        let values = rec
            .iter()
            .skip(1)
            .map(parse_cell)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|m| Error::parse(origin, format!("line {line}: {m}")))?;
        table
            .insert(&rec[0], values)
            .map_err(|e| Error::parse(origin, format!("line {line}: {e}")))?;
    }
    Ok(table)
}

pub fn read_table(path: &Path, level: GeoLevel) -> Result<GeoTable> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table_from(f, level, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_missing_values_and_keeps_leading_zeros() {
        let csv = "zcta,a,b\n01001,1.5,\n01002,NA,3\n";
        let t = read_table_from(csv.as_bytes(), GeoLevel::Zcta, Path::new("t.csv")).unwrap();
        assert_eq!(t.value("01001", "a"), Some(1.5));
        assert_eq!(t.value("01001", "b"), None);
        assert_eq!(t.value("01002", "b"), Some(3.0));
        let dup = "zcta,a\n1,1\n1,2\n";
        assert!(read_table_from(dup.as_bytes(), GeoLevel::Zcta, Path::new("t.csv")).is_err());
        let bad = "zcta,a\n1,abc\n";
        assert!(read_table_from(bad.as_bytes(), GeoLevel::Zcta, Path::new("t.csv")).is_err());
    }
}
