//! Spatial weights, great-circle distances, radius counts and GWR kernels.

mod geometry;
mod index;
pub mod io;
mod kernel;
mod weights;

pub use geometry::{haversine_miles, polygon_centroid, GeoPoint, PolygonPart, Ring, ZonePolygon, EARTH_RADIUS_MILES};
pub use index::{count_within_radius, PointGrid};
pub use kernel::{kernel_weights, kernel_weights_from_distances, KernelKind, KernelSpec};
pub use weights::{
    build_queen_contiguity, build_queen_contiguity_pairwise, island_warnings, row_standardize, spatial_lag_vector, WeightMatrix,
    SNAP_TOLERANCE,
};

pub(crate) use geometry::haversine_unchecked;
