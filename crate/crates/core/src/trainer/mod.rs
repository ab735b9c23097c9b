//! Group sampling, the training loop and checkpoint persistence.

mod checkpoint;
mod sampler;
mod train;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use sampler::GroupSampler;
pub use train::{train, TrainConfig};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes the loss history as `iteration,loss` CSV after an optional
/// `# ...` comment preamble.
pub fn write_loss_csv(path: &Path, preamble: &[String], history: &[f64]) -> Result<()> {
    let mut out = Vec::new();
    for line in preamble {
        writeln!(out, "# {line}").unwrap();
    }
    writeln!(out, "iteration,loss").unwrap();
    for (i, l) in history.iter().enumerate() {
        writeln!(out, "{i},{l:.9}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
