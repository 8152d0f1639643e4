//! Experiment orchestration: config, matrix execution, record store and
//! report emission.

mod config;
mod report;
mod run;

pub use config::{Datasets, ExperimentConfig, Grouping, TaskConfig};
pub use report::{
    aggregate_trials, compute_summaries, compute_table, emit_report, format_cell, Report, SummaryRow, TableRow,
    SIGNIFICANCE,
};
pub use run::{
    claim_outdir, generate, load_task, load_tasks, load_trimp, read_records, render, run_experiment, sort_records,
    write_records, RunOptions, RunSummary, TaskData, MANIFEST_FILE, PARTIAL_FILE, RECORDS_FILE,
};
