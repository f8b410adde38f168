//! Experiment harness: configuration, seeded runs, ablation/horizon reports
//! and the command-line entry points.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{default_config, overrides_from_file, resolve_config, ConfigOverrides, EnvKind, RunConfig};
pub use report::{ablation_matrix, horizon_sweep, median, model_error_report, normalize_curve, CellResult, HorizonResult};
pub use runner::{
    execute_run, final_window_mean, read_metrics_column, run_experiment, seed_dir,
    write_aggregate_csv, write_metrics_csv, write_trace_ndjson, ExperimentOutput, RunOutput,
    RunSummary, FINAL_WINDOW, METRICS_HEADER, SMOOTH_WINDOW,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Rl(#[from] curio_rl::RlError),
}

/// Worker threads used for seed-level parallelism.
pub fn default_parallelism() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Keeps freed training buffers pooled in the allocator instead of being
/// returned to the kernel every tick; the hot loop otherwise spends a large
/// share of its time in heap trimming. No effect outside Linux/glibc.
pub fn tune_allocator() {
    #[cfg(target_os = "linux")]
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 1 << 30);
        libc::mallopt(libc::M_TRIM_THRESHOLD, 1 << 30);
    }
}
