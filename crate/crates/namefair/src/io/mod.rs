//! On-disk formats: word vectors, model parameters, dataset cache, cluster
//! exports and CSV reports.

pub mod cache;
pub mod clusters;
pub mod embeddings;
pub mod model;
pub mod tables;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

/// Creates `path` (and its parent directories) and hands a buffered writer
/// to `body`.
pub fn write_with(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::write(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|_| out.flush()).map_err(|e| CliError::write(path, e))
}
