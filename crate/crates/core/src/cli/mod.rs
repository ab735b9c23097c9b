//! Config file handling and the subcommands behind the `fabricnet` binary.

mod commands;
mod config;

pub use commands::{cmd_confuse, cmd_eval, cmd_gen, cmd_ingest, cmd_train, exit_code};
pub use config::{Paths, RunConfig};

/// Runs `f` on a pool of `workers` threads (0 = rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(f))
}
