//! End-to-end runs driven by a TOML config: fusion, weights, the four models,
//! diagnostics, cross-validation, sweeps and the comparison report.

mod config;
mod report;
mod run;

pub use config::{CvConfig, GwrConfig, Inputs, ModelName, MoranConfig, RunConfig, StationConfig, SweepConfig, TableInput};
pub use report::{
    stars, CoefficientCell, CoefficientRow, ComparisonReport, CvCell, Metadata, ModelColumn, MoranCell, VifCell,
};
pub use run::{
    build_report, cross_validate, diagnose, fit_all, gwr_kernel, load_crosswalk, prepare, run_pipeline, run_sweep,
    run_threshold_sweep, to_json, with_stale_marker, write_assembly, write_file, Diagnostics, Fitted, OutputFormat,
    PipelineError, Prepared, Stage, StageResult, SweepSummary, ThresholdSummary, Warnings, STALE_MARKER,
};
