//! Cluster exports: centroids as a vector file (`"<k> <dimension>"` header,
//! one `cluster<i> v1 ... vd` line per centroid) and per-record assignments
//! as a two-column `record,cluster` CSV, with `unassigned` for records whose
//! name has no embedding.

use std::io::Write;
use std::path::Path;

use namefair_core::ClusterModel;

use super::tables::write_csv;
use super::write_with;
use crate::error::Result;

pub fn write_centroids(path: &Path, model: &ClusterModel) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "{} {}", model.k, model.dimension())?;
        for (i, c) in model.centroids.iter().enumerate() {
            write!(out, "cluster{i}")?;
            for v in c {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    })
}

pub fn write_assignments(path: &Path, clusters: &[Option<usize>]) -> Result<()> {
    let rows: Vec<Vec<String>> = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| vec![i.to_string(), c.map_or("unassigned".to_string(), |c| c.to_string())])
        .collect();
    write_csv(path, &["record".to_string(), "cluster".to_string()], &rows)
}
