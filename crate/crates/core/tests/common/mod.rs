#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spatreg::estimators::ModelFrame;
use spatreg::spatial::{build_queen_contiguity, polygon_centroid, row_standardize, GeoPoint, WeightMatrix, ZonePolygon};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `nx × ny` unit squares scaled by `cell` degrees, row-major from (−100, 40).
pub fn lattice(nx: usize, ny: usize, cell: f64) -> Vec<ZonePolygon> {
    let mut out = Vec::with_capacity(nx * ny);
    for r in 0..ny {
        for c in 0..nx {
            let (x0, y0) = (-100.0 + c as f64 * cell, 40.0 + r as f64 * cell);
            let ring = vec![(x0, y0), (x0 + cell, y0), (x0 + cell, y0 + cell), (x0, y0 + cell), (x0, y0)];
            out.push(ZonePolygon::new(format!("z{r:03}_{c:03}"), vec![ring]).unwrap());
        }
    }
    out
}

pub struct Lattice {
    pub polygons: Vec<ZonePolygon>,
    pub w: WeightMatrix,
    pub centroids: Vec<GeoPoint>,
}

impl Lattice {
    pub fn new(nx: usize, ny: usize) -> Self {
        let polygons = lattice(nx, ny, 0.1);
        let (w, _) = row_standardize(&build_queen_contiguity(&polygons).unwrap()).unwrap();
        let centroids = polygons.iter().map(|p| polygon_centroid(p).unwrap()).collect();
        Self { polygons, w, centroids }
    }

    pub fn n(&self) -> usize {
        self.polygons.len()
    }

    pub fn ids(&self) -> Vec<String> {
        self.polygons.iter().map(|p| p.zone_id.clone()).collect()
    }

    pub fn frame(&self, y: Vec<f64>, x: &DMatrix<f64>) -> ModelFrame {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        ModelFrame::new(self.ids(), y, x.clone(), names, self.centroids.clone()).unwrap()
    }

    /// (I − ρW) as a dense matrix.
    pub fn system(&self, rho: f64) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n()) - self.w.to_dense() * rho
    }
}

/// Standard-normal design with `p` columns.
pub fn design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_vec(n, p, normals(rng, n * p))
}

/// β₀ + Xβ
pub fn trend(x: &DMatrix<f64>, beta: &[f64]) -> DVector<f64> {
    let b = DVector::from_column_slice(&beta[1..]);
    x * b + DVector::from_element(x.nrows(), beta[0])
}

/// Independent great-circle distance in miles (spherical law of cosines via atan2 form).
pub fn great_circle_miles(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dl = (b.longitude - a.longitude).to_radians();
    let x = p2.cos() * dl.sin();
    let y = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    let z = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    3958.8 * (x.hypot(y)).atan2(z)
}
