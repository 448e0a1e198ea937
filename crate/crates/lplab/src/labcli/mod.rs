//! Experiment orchestration behind the `labcli` binary.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, MIN_REPLICATES, SCHEMA_VERSION};
pub use experiment::{
    cache_file, grid_seed, pearson, run_experiment, run_experiment_with_cache, simulate_to_cache, ExperimentReport,
    GridRow, RunOutput, Status, TargetInfo, Timing, Verdict,
};
pub use report::{convergence_report, load_report, table_csv, write_outputs, write_summary, Summary, CSV_COLUMNS};

/// Sets the worker count for replicate parallelism. Results do not depend on it.
pub fn configure_threads(n: usize) -> crate::Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| crate::LabError::config(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}
