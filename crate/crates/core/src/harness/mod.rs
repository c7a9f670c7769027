//! Experimental protocol: datasets, identity splits, hardware sweeps, and
//! trend reports.

mod config;
mod dataset;
mod report;
pub mod seeds;
mod sweep;

pub use config::{load_config, parse_config, to_config_json, Axis, AxisValue, DatasetSpec, SweepSpec, TargetSpec, SPEC_VERSION};
pub use dataset::{
    build_dataset, camera_axis_values, frame_plan, identity_model, render_frame, sha256_hex, split_identities,
    DatasetManifest, DatasetOptions, FrameInfo, FrameLabel, ManifestFrame, ARTIFACT_VERSION,
};
pub use report::{load_report, to_csv, trend_svg, write_report, CSV_HEADER};
pub use sweep::{
    correlate_trends, run_sweep, run_sweeps, AxisSummary, CellResult, EstimatorKind, Percentile, SweepReport,
};
