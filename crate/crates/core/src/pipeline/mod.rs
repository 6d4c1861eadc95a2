//! Preset and custom preprocessing pipelines, repeated-CV experiments,
//! aggregation, comparison and export.

mod config;
mod report;
mod run;

pub use config::{build_set, CvConfig, PipelineConfig, SelectMethod, SelectSpec, SetId, Stage, SET_LOF_NEIGHBORS, SET_MU};
pub use report::{
    aggregate, bar_rows, compare, export_plot_data, export_result, fold_rows, format_cell, format_cell_percent,
    import_result, mean_std, render_table, Aggregate, BarRow, ComparisonReport, FoldRow, MetricComparison,
    ModelComparison,
};
pub use run::{
    fit_fold, run_experiment, run_experiment_with_plan, split_digest, ExperimentResult, FoldArtifacts, FoldManifest,
    FoldRecord, Manifest, PercentMetrics,
};
