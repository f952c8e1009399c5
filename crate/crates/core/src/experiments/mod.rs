//! Scenarios, comparison runs and their CSV/SVG artifacts.

mod charts;
mod output;
mod report;
mod scenario;

pub use charts::{build_charts, emit_charts, Chart, LineStyle, Series};
pub use output::{
    emit_csv, write_checkpoints, write_mc_validation, write_trajectories, CHECKPOINTS_CSV,
    CHECKPOINT_HEADER, MC_HEADER, MC_VALIDATION_CSV, SUMMARY_JSON, TRAJECTORIES_CSV,
    TRAJECTORY_HEADER,
};
pub use report::{
    run_scenario, CheckpointRow, ComparisonReport, Explosion, McSummary, McValidationRow, Methods,
    MomentSeries,
};
pub use scenario::{Scenario, BUILTIN_NAMES, DEFAULT_DT, DEFAULT_MC_PATHS, DEFAULT_SEED};
