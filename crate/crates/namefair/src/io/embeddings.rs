//! Word vector files: a `"<count> <dimension>"` header, then one
//! `token v1 ... vd` line per entry.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use namefair_core::embeddings::EmbeddingLoader;
use namefair_core::EmbeddingTable;

use super::write_with;
use crate::error::{CliError, Context, Result};

/// Streams a vector file. With an allowlist only those tokens are kept, and
/// other lines are skipped unparsed.
pub fn read_embeddings(path: &Path, allowlist: Option<&BTreeSet<String>>) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| CliError::read(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let ctx = path.display();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| CliError::read(path, e))?,
        None => return Err(CliError::validation(format!("{ctx}:1: missing header"))),
    };
    let mut loader = EmbeddingLoader::new(&header, allowlist).context(&ctx)?;
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| CliError::read(path, e))?;
        loader.feed(i + 2, &line).context(&ctx)?;
    }
    Ok(loader.finish())
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "{} {}", table.len(), table.dimension())?;
        for (token, vector) in table.iter() {
            write!(out, "{token}")?;
            for v in vector {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    })
}
