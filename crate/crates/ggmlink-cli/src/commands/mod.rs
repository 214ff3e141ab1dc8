pub mod diagnose;
pub mod evaluate;
pub mod export;
pub mod fit;
pub mod select;
pub mod simulate;

use anyhow::{Context, Result};
use std::path::Path;

/// Create the run's output directory (and parents).
pub fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("creating output directory {}", path.display()))
}

/// One-based group file naming used across commands.
pub fn group_file(stem: &str, group: usize, ext: &str) -> String {
    format!("{stem}{}.{ext}", group + 1)
}
