//! Trained model files.
//!
//! ```text
//! namefair-model 1
//! classes <C>
//! features <F>
//! class<TAB><name>          C lines, in class-index order
//! feature<TAB><name>        F lines, in column order
//! bias<TAB>b_0 ... b_{C-1}  tab-separated
//! weights<TAB>w_c0 ... w_cF one line per class
//! ```
//!
//! Numbers are written in shortest round-trip form, so a reload reproduces
//! the parameters bit for bit.

use std::io::Write;
use std::path::Path;

use namefair_core::ModelParams;

use super::{read_to_string, write_with};
use crate::error::{CliError, Result};

const MAGIC: &str = "namefair-model 1";

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl SavedModel {
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\t")
}

pub fn write_model(path: &Path, model: &SavedModel) -> Result<()> {
    let p = &model.params;
    write_with(path, |out| {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "classes {}", p.num_classes())?;
        writeln!(out, "features {}", p.num_features())?;
        for c in &model.class_names {
            writeln!(out, "class\t{c}")?;
        }
        for f in &model.feature_names {
            writeln!(out, "feature\t{f}")?;
        }
        writeln!(out, "bias\t{}", join(&p.bias))?;
        for c in 0..p.num_classes() {
            writeln!(out, "weights\t{}", join(p.class_weights_row(c)))?;
        }
        Ok(())
    })
}

pub fn read_model(path: &Path) -> Result<SavedModel> {
    let text = read_to_string(path)?;
    parse_model(&text).map_err(|(line, msg)| CliError::validation(format!("{}:{line}: {msg}", path.display())))
}

fn parse_model(text: &str) -> std::result::Result<SavedModel, (usize, String)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| lines.next().ok_or((0, format!("unexpected end of file, expected {what}")));

    let (no, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err((no, format!("expected {MAGIC:?}")));
    }
    let mut count = |key: &str| -> std::result::Result<usize, (usize, String)> {
        let (no, line) = next(key)?;
        line.strip_prefix(key)
            .and_then(|rest| rest.trim().parse().ok())
            .ok_or((no, format!("expected \"{key} <count>\"")))
    };
    let classes = count("classes")?;
    let features = count("features")?;
    let mut tagged = |tag: &str| -> std::result::Result<(usize, String), (usize, String)> {
        let (no, line) = next(tag)?;
        line.strip_prefix(tag)
            .and_then(|rest| rest.strip_prefix('\t'))
            .map(|rest| (no, rest.to_string()))
            .ok_or((no, format!("expected a {tag:?} line")))
    };
    let class_names = (0..classes).map(|_| tagged("class").map(|(_, v)| v)).collect::<Result<Vec<_>, _>>()?;
    let feature_names = (0..features).map(|_| tagged("feature").map(|(_, v)| v)).collect::<Result<Vec<_>, _>>()?;
    let numbers = |no: usize, s: &str, want: usize| -> std::result::Result<Vec<f64>, (usize, String)> {
        let values: Vec<f64> = s
            .split('\t')
            .map(|v| v.trim().parse::<f64>().map_err(|_| (no, format!("invalid number {v:?}"))))
            .collect::<Result<_, _>>()?;
        if values.len() != want {
            return Err((no, format!("expected {want} values, found {}", values.len())));
        }
        Ok(values)
    };
    let (no, bias) = tagged("bias")?;
    let bias = numbers(no, &bias, classes)?;
    let mut weights = Vec::with_capacity(classes * features);
    for _ in 0..classes {
        let (no, row) = tagged("weights")?;
        if features == 0 {
            if !row.trim().is_empty() {
                return Err((no, "expected no weights".into()));
            }
            continue;
        }
        weights.extend(numbers(no, &row, features)?);
    }
    let params = ModelParams::from_parts(classes, features, weights, bias).map_err(|e| (0, e.to_string()))?;
    Ok(SavedModel {
        params,
        class_names,
        feature_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_line_numbers() {
        let good = "namefair-model 1\nclasses 2\nfeatures 1\nclass\ta\nclass\tb\nfeature\tx\nbias\t0\t1\nweights\t0.5\nweights\t-2\n";
        let m = parse_model(good).unwrap();
        assert_eq!(m.params.weights, vec![0.5, -2.0]);
        assert_eq!(m.class_index("b"), Some(1));
        let bad = good.replace("weights\t-2", "weights\tx");
        assert_eq!(parse_model(&bad).unwrap_err().0, 9);
        assert!(parse_model("nope\n").is_err());
    }
}
