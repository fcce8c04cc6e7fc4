//! Command-line surface for propensity-score adjusted dynamic borrowing:
//! CSV ingestion, the `analyze` and `simulate` commands, and run manifests.

pub mod analyze;
pub mod csv_io;
pub mod error;
pub mod fixture;
pub mod manifest;
pub mod simulate;

pub use analyze::{cmd_analyze, AnalysisConfig, AnalysisReport};
pub use csv_io::{parse_dataset_csv, write_dataset_csv, ColumnRoles, LoadedData};
pub use error::{CliError, Result};
pub use simulate::{cmd_simulate, SimulateConfig, SimulateReport};

/// Runs `f` on a dedicated rayon pool of `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
