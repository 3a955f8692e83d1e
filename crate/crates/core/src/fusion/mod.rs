//! Multi-geography fusion: tract→ZCTA crosswalk, aggregation, frame assembly
//! and the station-radius sweep.

mod aggregate;
mod assemble;
mod crosswalk;
mod sweep;
mod table;

pub use aggregate::{aggregate_to_zcta, Aggregated};
pub use assemble::{assemble_frame, Assembled, AssemblyReport};
pub use crosswalk::{
    crosswalk_assign, read_crosswalk, read_crosswalk_from, threshold_sensitivity, Assignment, CrosswalkRow,
    ThresholdCount, DEFAULT_THRESHOLD,
};
pub use sweep::{radius_sweep, SweepCell, SweepTable, DEFAULT_RADII};
pub use table::{read_table, read_table_from, GeoLevel, GeoTable};
