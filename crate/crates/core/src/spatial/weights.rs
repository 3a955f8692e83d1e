use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use super::geometry::ZonePolygon;
use crate::error::{Error, Result};

/// Two vertices coincide when both coordinates agree within this many degrees.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// Sparse spatial weights over `n` zones, stored as sorted adjacency rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMatrix {
    zone_ids: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
    standardized: bool,
    /// Row sums of the matrix before standardization; recovers the symmetric base.
    #[serde(skip)]
    row_scale: Option<Vec<f64>>,
}

impl WeightMatrix {
    /// Builds a matrix from explicit `(i, j, weight)` triplets. Zero weights are dropped.
    pub fn from_triplets(
        zone_ids: Vec<String>,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = zone_ids.len();
        let mut rows = vec![Vec::new(); n];
        for (i, j, w) in triplets {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("weight index ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::invalid(format!("self-weight at zone {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!("weight ({i}, {j}) = {w} is not a finite nonnegative value")));
            }
            if w > 0.0 {
                rows[i].push((j, w));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid("duplicate weight entry"));
            }
        }
        Ok(Self {
            zone_ids,
            rows,
            standardized: false,
            row_scale: None,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn zone_ids(&self) -> &[String] {
        &self.zone_ids
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    /// Zones with no neighbors.
    pub fn islands(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.rows[i].is_empty()).collect()
    }

    pub fn island_ids(&self) -> Vec<String> {
        self.islands().into_iter().map(|i| self.zone_ids[i].clone()).collect()
    }

    /// Sum of all weights (S₀).
    pub fn total_weight(&self) -> f64 {
        self.rows.iter().flatten().map(|e| e.1).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, w)| (i, j, w)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n(), self.n());
        for (i, j, w) in self.triplets() {
            m[(i, j)] = w;
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets().all(|(i, j, w)| (self.get(j, i) - w).abs() <= tol)
    }

    /// W·x.
    pub fn lag(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(self.rows.iter().map(|r| r.iter().map(|&(j, w)| w * x[j]).sum()).collect())
    }

    /// Unstandardized weight (i, j): the entry of the matrix this one was normalized from.
    pub(crate) fn base_weight(&self, i: usize, w: f64) -> f64 {
        match &self.row_scale {
            Some(s) => w * s[i],
            None => w,
        }
    }

    /// Symmetric matrix similar to `self`, when one exists through diagonal scaling.
    pub(crate) fn symmetric_similar(&self) -> Result<DMatrix<f64>> {
        let tol = 1e-10;
        match (&self.row_scale, self.standardized) {
            (Some(scale), true) => {
                // W = D⁻¹C with C symmetric ⇒ D^{1/2} W D^{-1/2} has entries C_ij / sqrt(d_i d_j)
                let mut m = DMatrix::zeros(self.n(), self.n());
                for (i, j, w) in self.triplets() {
                    let cij = w * scale[i];
                    let cji = self.get(j, i) * scale[j];
                    if (cij - cji).abs() > tol * cij.abs().max(1.0) {
                        return Err(Error::NonSymmetricWeights);
                    }
                    m[(i, j)] = cij / (scale[i] * scale[j]).sqrt();
                }
                Ok(m)
            }
            _ => {
                if !self.is_symmetric(tol) {
                    return Err(Error::NonSymmetricWeights);
                }
                Ok(self.to_dense())
            }
        }
    }

    /// Submatrix over `keep` (indices into this matrix, in the new order).
    /// A standardized matrix is re-standardized over the retained links.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut new_index = HashMap::with_capacity(keep.len());
        for (k, &i) in keep.iter().enumerate() {
            if i >= self.n() || new_index.insert(i, k).is_some() {
                return Err(Error::invalid(format!("invalid or repeated row index {i} in restriction")));
            }
        }
        let zone_ids = keep.iter().map(|&i| self.zone_ids[i].clone()).collect();
        let triplets: Vec<_> = keep
            .iter()
            .enumerate()
            .flat_map(|(k, &i)| {
                let new_index = &new_index;
                self.rows[i].iter().filter_map(move |&(j, w)| {
                    new_index.get(&j).map(|&kj| (k, kj, self.base_weight(i, w)))
                })
            })
            .collect();
        let base = Self::from_triplets(zone_ids, triplets)?;
        if self.standardized {
            Ok(row_standardize(&base)?.0)
        } else {
            Ok(base)
        }
    }

    /// Writes a `i_id,j_id,weight` edge list with a one-line header.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_edge_list_to(&mut out).map_err(|e| Error::io(path, e))
    }

    pub fn write_edge_list_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i_id,j_id,weight")?;
        for (i, j, w) in self.triplets() {
            writeln!(out, "{},{},{}", self.zone_ids[i], self.zone_ids[j], w)?;
        }
        out.flush()
    }
}

fn check_ids(polygons: &[ZonePolygon]) -> Result<()> {
    let mut seen = HashSet::with_capacity(polygons.len());
    for p in polygons {
        if !seen.insert(p.zone_id.as_str()) {
            return Err(Error::DuplicateZone(p.zone_id.clone()));
        }
        p.validate()?;
    }
    Ok(())
}

#[inline]
fn coincide(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() <= SNAP_TOLERANCE && (a.1 - b.1).abs() <= SNAP_TOLERANCE
}

fn cell(v: (f64, f64)) -> (i64, i64) {
    ((v.0 / SNAP_TOLERANCE).floor() as i64, (v.1 / SNAP_TOLERANCE).floor() as i64)
}

fn binary_from_pairs(polygons: &[ZonePolygon], pairs: BTreeSet<(usize, usize)>) -> Result<WeightMatrix> {
    let ids = polygons.iter().map(|p| p.zone_id.clone()).collect();
    WeightMatrix::from_triplets(ids, pairs.into_iter().flat_map(|(i, j)| [(i, j, 1.0), (j, i, 1.0)]))
}

/// Binary queen contiguity: zones are neighbors when they share at least one vertex.
///
/// Vertices are bucketed on a grid of [`SNAP_TOLERANCE`] cells and compared against the
/// 3×3 neighborhood, so the build is near-linear in the vertex count.
pub fn build_queen_contiguity(polygons: &[ZonePolygon]) -> Result<WeightMatrix> {
    check_ids(polygons)?;
    let mut grid: HashMap<(i64, i64), Vec<(usize, (f64, f64))>> = HashMap::new();
    for (z, p) in polygons.iter().enumerate() {
        for v in p.vertices() {
            let bucket = grid.entry(cell(v)).or_default();
            if !bucket.iter().any(|&(zz, u)| zz == z && u == v) {
                bucket.push((z, v));
            }
        }
    }
    let mut pairs = BTreeSet::new();
    for (&(cx, cy), bucket) in &grid {
        for &(a, va) in bucket {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(other) = grid.get(&(cx + dx, cy + dy)) else { continue };
                    for &(b, vb) in other {
                        if a < b && coincide(va, vb) {
                            pairs.insert((a, b));
                        }
                    }
                }
            }
        }
    }
    binary_from_pairs(polygons, pairs)
}

/// All-pairs reference build of [`build_queen_contiguity`].
pub fn build_queen_contiguity_pairwise(polygons: &[ZonePolygon]) -> Result<WeightMatrix> {
    check_ids(polygons)?;
    let verts: Vec<Vec<(f64, f64)>> = polygons.iter().map(|p| p.vertices().collect()).collect();
    let mut pairs = BTreeSet::new();
    for a in 0..polygons.len() {
        for b in a + 1..polygons.len() {
            if verts[a].iter().any(|&u| verts[b].iter().any(|&v| coincide(u, v))) {
                pairs.insert((a, b));
            }
        }
    }
    binary_from_pairs(polygons, pairs)
}

/// Divides every nonzero row by its sum. Island rows stay zero and are reported
/// in the returned warnings.
pub fn row_standardize(w: &WeightMatrix) -> Result<(WeightMatrix, Vec<String>)> {
    if w.standardized {
        return Err(Error::invalid("weight matrix is already row-standardized"));
    }
    let mut scale = Vec::with_capacity(w.n());
    let mut rows = Vec::with_capacity(w.n());
    for row in &w.rows {
        let s: f64 = row.iter().map(|e| e.1).sum();
        scale.push(s);
        rows.push(row.iter().map(|&(j, v)| (j, v / s)).collect());
    }
    let warnings = island_warnings(w);
    Ok((
        WeightMatrix {
            zone_ids: w.zone_ids.clone(),
            rows,
            standardized: true,
            row_scale: Some(scale),
        },
        warnings,
    ))
}

/// One warning per zone without neighbors.
pub fn island_warnings(w: &WeightMatrix) -> Vec<String> {
    w.island_ids()
        .into_iter()
        .map(|id| format!("zone {id} has no neighbors (island); its weight row is zero"))
        .collect()
}

/// W·x; alias of [`WeightMatrix::lag`].
pub fn spatial_lag_vector(w: &WeightMatrix, x: &[f64]) -> Result<Vec<f64>> {
    w.lag(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn grid(nx: usize, ny: usize) -> Vec<ZonePolygon> {
        let mut out = Vec::new();
        for r in 0..ny {
            for c in 0..nx {
                let (x, y) = (c as f64, r as f64);
                let ring = vec![(x, y), (x + 1.0, y), (x + 1.0, y + 1.0), (x, y + 1.0), (x, y)];
                out.push(ZonePolygon::new(format!("z{r}_{c}"), vec![ring]).unwrap());
            }
        }
        out
    }

    #[test]
    fn single_polygon_has_no_neighbors() {
        let w = build_queen_contiguity(&grid(1, 1)).unwrap();
        assert_eq!(w.n(), 1);
        assert_eq!(w.nnz(), 0);
        assert_eq!(w.islands(), vec![0]);
    }

    #[test]
    fn two_by_two_all_adjacent() {
        let w = build_queen_contiguity(&grid(2, 2)).unwrap();
        assert!((0..4).all(|i| w.degree(i) == 3));
    }

    #[test]
    fn three_by_three_degrees() {
        let w = build_queen_contiguity(&grid(3, 3)).unwrap();
        let deg: Vec<_> = (0..9).map(|i| w.degree(i)).collect();
        assert_eq!(deg, vec![3, 5, 3, 5, 8, 5, 3, 5, 3]);
        assert_eq!(w, build_queen_contiguity_pairwise(&grid(3, 3)).unwrap());
    }

    #[test]
    fn snapping_joins_nearly_equal_vertices() {
        let a = ZonePolygon::new("a", vec![vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)]]).unwrap();
        let b = ZonePolygon::new(
            "b",
            vec![vec![(1.0 + 5e-10, 1.0 - 5e-10), (2.0, 1.0), (2.0, 2.0), (1.0 + 5e-10, 1.0 - 5e-10)]],
        )
        .unwrap();
        let c = ZonePolygon::new("c", vec![vec![(2.0 + 1e-8, 2.0), (3.0, 2.0), (3.0, 3.0), (2.0 + 1e-8, 2.0)]]).unwrap();
        let w = build_queen_contiguity(&[a, b, c]).unwrap();
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(1, 2), 0.0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut g = grid(2, 1);
        g[1].zone_id = g[0].zone_id.clone();
        match build_queen_contiguity(&g) {
            Err(Error::DuplicateZone(id)) => assert_eq!(id, "z0_0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn standardize_rows() {
        let ids = (0..4).map(|i| i.to_string()).collect();
        let w = WeightMatrix::from_triplets(ids, [(0, 1, 1.0), (0, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0)]).unwrap();
        let (s, warnings) = row_standardize(&w).unwrap();
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.get(0, 2), 0.5);
        assert_eq!(s.get(0, 3), 0.0);
        assert!(s.row(3).is_empty());
        assert_eq!(warnings.len(), 1);
        assert!(row_standardize(&s).is_err());
    }

    #[test]
    fn lag_of_unit_vector_is_column() {
        let w = build_queen_contiguity(&grid(3, 2)).unwrap();
        let mut e = vec![0.0; 6];
        e[4] = 1.0;
        let col = w.lag(&e).unwrap();
        for (i, v) in col.iter().enumerate() {
            assert_eq!(*v, w.get(i, 4));
        }
        assert!(w.lag(&[1.0]).is_err());
    }

    #[test]
    fn restrict_restandardizes() {
        let (w, _) = row_standardize(&build_queen_contiguity(&grid(3, 1)).unwrap()).unwrap();
        let r = w.restrict(&[0, 1]).unwrap();
        assert_eq!(r.get(1, 0), 1.0);
        assert_eq!(r.get(0, 1), 1.0);
        assert!(r.is_standardized());
    }

    #[test]
    fn edge_list_format() {
        let w = build_queen_contiguity(&grid(2, 1)).unwrap();
        let mut buf = Vec::new();
        w.write_edge_list_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "i_id,j_id,weight\nz0_0,z0_1,1\nz0_1,z0_0,1\n");
    }
}
