//! Experiment orchestration: configs, per-method runs, result files and the
//! comparison report.

mod config;
mod report;
mod results;
mod run;

pub use config::{BoConfig, DataConfig, ExperimentConfig, Method};
pub use report::{
    decode_summary, encode_summary, load_report, render_table, summarize, MethodSummary, Report, SUMMARY_MAGIC,
};
pub use results::{
    decode_results, encode_results, read_results, write_results, ResultRow, RESULTS_COLUMNS, RESULTS_MAGIC,
};
pub use run::{
    checkpoint_path, compare, run_method, train_mask, CompareOutput, MethodRun, RunOptions, CHECKPOINT_DIR,
    RESULTS_FILE, SUMMARY_FILE, TABLE_FILE, TRACE_FILE,
};
