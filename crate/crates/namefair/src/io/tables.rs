//! CSV reports. Undefined values are written as empty cells.

use std::path::Path;

use namefair_core::{BiasReport, TrainHistory};

use crate::error::{CliError, Result};

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `header` and `rows` to `path`, creating parent directories.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::write(path, e))?;
    w.write_record(header).map_err(|e| CliError::write(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::write(path, e))?;
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn write_history(path: &Path, history: &TrainHistory) -> Result<()> {
    let header = strings(&["epoch", "base_loss", "penalty", "total_loss", "val_balanced_tpr"]);
    let rows: Vec<Vec<String>> = history
        .epochs
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                e.base_loss.to_string(),
                e.penalty.to_string(),
                e.total_loss.to_string(),
                cell(e.val_balanced_tpr),
            ]
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// One row per (attribute, class) cell of each labelled report.
pub fn write_bias_cells(path: &Path, reports: &[(String, &BiasReport)], class_names: &[String]) -> Result<()> {
    let header = strings(&[
        "run",
        "attribute",
        "class",
        "tpr_positive",
        "tpr_negative",
        "gap",
        "support_positive",
        "support_negative",
    ]);
    let mut rows = Vec::new();
    for (run, report) in reports {
        for c in &report.cells {
            rows.push(vec![
                run.clone(),
                c.attribute.clone(),
                class_names.get(c.class).cloned().unwrap_or_else(|| c.class.to_string()),
                cell(c.tpr_positive),
                cell(c.tpr_negative),
                cell(c.gap),
                c.support_positive.to_string(),
                c.support_negative.to_string(),
            ]);
        }
    }
    write_csv(path, &header, &rows)
}

/// Headline numbers of one run: balanced TPR, then RMS gap per attribute,
/// then max gap per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run: String,
    pub variant: String,
    pub lambda: f64,
    pub values: Vec<Option<f64>>,
}

pub fn summary_header(attributes: &[String]) -> Vec<String> {
    let mut h = strings(&["run", "variant", "lambda", "balanced_tpr"]);
    h.extend(attributes.iter().map(|a| format!("gap_rms_{a}")));
    h.extend(attributes.iter().map(|a| format!("gap_max_{a}")));
    h
}

pub fn summary_values(report: &BiasReport, attributes: &[String]) -> Vec<Option<f64>> {
    let mut v = vec![report.balanced_tpr];
    v.extend(attributes.iter().map(|a| report.attribute(a).and_then(|s| s.gap_rms)));
    v.extend(attributes.iter().map(|a| report.attribute(a).and_then(|s| s.gap_max)));
    v
}

/// Column-wise mean over the defined entries of `rows`.
pub fn mean_values(rows: &[&SummaryRow]) -> Vec<Option<f64>> {
    let width = rows.first().map_or(0, |r| r.values.len());
    (0..width)
        .map(|j| {
            let defined: Vec<f64> = rows.iter().filter_map(|r| r.values[j]).collect();
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
        })
        .collect()
}

pub fn write_summary(path: &Path, attributes: &[String], rows: &[SummaryRow]) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.run.clone(), r.variant.clone(), r.lambda.to_string()];
            v.extend(r.values.iter().map(|x| cell(*x)));
            v
        })
        .collect();
    write_csv(path, &summary_header(attributes), &body)
}
