//! Tabular preprocessing: min-max scaling of continuous columns (fitted on
//! training rows, clamped to [0, 1] elsewhere) and one-hot indicators for
//! categorical columns.
//!
//! Schema text, one column per line (`#` starts a comment):
//!
//! ```text
//! age       = continuous
//! workclass = categorical
//! income    = label
//! sex       = group gender Male Female
//! race      = group race White non-White
//! name      = first_name
//! fnlwgt    = ignore
//! ```
//!
//! `group <attribute> <positive> [<negative>]` declares an evaluation-only
//! binary attribute: cells equal to `<positive>` (case-insensitive) are
//! positive, empty or `?` cells are unknown, anything else is negative.
//! Header columns not named in the schema are ignored.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::features::FeatureMatrix;
use crate::metrics::{GroupAttribute, GroupLabels};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRole {
    Continuous,
    Categorical,
    Label,
    Ignore,
    Group {
        attribute: String,
        positive: String,
        negative: String,
    },
    FirstName,
    LastName,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TabularSchema {
    pub columns: Vec<(String, ColumnRole)>,
}

impl TabularSchema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns: Vec<(String, ColumnRole)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let (name, role) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected \"column = role\", got {line:?}")))?;
            let name = name.trim().to_string();
            let mut parts = role.split_whitespace();
            let kind = parts.next().ok_or_else(|| err("missing role".into()))?;
            let role = match kind.to_ascii_lowercase().as_str() {
                "continuous" => ColumnRole::Continuous,
                "categorical" => ColumnRole::Categorical,
                "label" => ColumnRole::Label,
                "ignore" => ColumnRole::Ignore,
                "first_name" => ColumnRole::FirstName,
                "last_name" => ColumnRole::LastName,
                "group" => {
                    let attribute = parts.next().ok_or_else(|| err("group needs an attribute name".into()))?;
                    let positive = parts.next().ok_or_else(|| err("group needs a positive value".into()))?;
                    let negative = parts.next().map_or_else(|| format!("non-{positive}"), str::to_string);
                    ColumnRole::Group {
                        attribute: attribute.to_string(),
                        positive: positive.to_string(),
                        negative,
                    }
                }
                other => return Err(err(format!("unknown role {other:?}"))),
            };
            if columns.iter().any(|(n, _)| *n == name) {
                return Err(err(format!("column {name:?} declared twice")));
            }
            columns.push((name, role));
        }
        let labels = columns.iter().filter(|(_, r)| *r == ColumnRole::Label).count();
        if labels != 1 {
            return Err(Error::InvalidParameter(format!("schema needs exactly one label column, found {labels}")));
        }
        Ok(Self { columns })
    }

    pub fn label_column(&self) -> &str {
        self.columns
            .iter()
            .find(|(_, r)| *r == ColumnRole::Label)
            .map(|(n, _)| n.as_str())
            .expect("validated schema has a label")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Encoded {
    Continuous { col: usize, min: f64, max: f64 },
    Categorical { col: usize, levels: Vec<String> },
    Label { col: usize },
    Group { col: usize, attribute: String, positive: String, negative: String },
    FirstName { col: usize },
    LastName { col: usize },
}

/// Counts of cells that fell outside what the encoder saw while fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransformStats {
    pub unseen_categories: usize,
    pub clamped_values: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularEncoder {
    encoded: Vec<Encoded>,
    num_input_columns: usize,
    class_names: Vec<String>,
    feature_names: Vec<String>,
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line: row + 2,
        message: format!("column {column:?}: cannot parse {cell:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: row + 2,
            message: format!("column {column:?}: non-finite value {cell:?}"),
        });
    }
    Ok(v)
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

impl TabularEncoder {
    /// Fits scaling ranges and category levels on `train_rows`; class names
    /// are the sorted distinct label values across all rows. Error line
    /// numbers assume a header on line 1 and row `i` on line `i + 2`.
    pub fn fit(header: &[String], rows: &[Vec<String>], train_rows: &[usize], schema: &TabularSchema) -> Result<Self> {
        let position = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Missing(format!("column {name:?} not found in header")))
        };
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("expected {} cells, found {}", header.len(), row.len()),
                });
            }
        }
        if train_rows.is_empty() {
            return Err(Error::Empty("training rows"));
        }
        let mut encoded = Vec::new();
        let mut feature_names = Vec::new();
        let mut class_names = Vec::new();
        for (name, role) in &schema.columns {
            let col = position(name)?;
            let cell = |i: usize| rows[i][col].trim();
            match role {
                ColumnRole::Ignore => {}
                ColumnRole::Continuous => {
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    for &i in train_rows {
                        let v = parse_number(cell(i), i, name)?;
                        min = min.min(v);
                        max = max.max(v);
                    }
                    feature_names.push(name.clone());
                    encoded.push(Encoded::Continuous { col, min, max });
                }
                ColumnRole::Categorical => {
                    let levels: BTreeSet<&str> = train_rows.iter().map(|&i| cell(i)).collect();
                    let levels: Vec<String> = levels.into_iter().map(str::to_string).collect();
                    feature_names.extend(levels.iter().map(|l| format!("{name}={l}")));
                    encoded.push(Encoded::Categorical { col, levels });
                }
                ColumnRole::Label => {
                    let classes: BTreeSet<&str> = (0..rows.len()).map(cell).collect();
                    class_names = classes.into_iter().map(str::to_string).collect();
                    encoded.push(Encoded::Label { col });
                }
                ColumnRole::Group {
                    attribute,
                    positive,
                    negative,
                } => encoded.push(Encoded::Group {
                    col,
                    attribute: attribute.clone(),
                    positive: positive.clone(),
                    negative: negative.clone(),
                }),
                ColumnRole::FirstName => encoded.push(Encoded::FirstName { col }),
                ColumnRole::LastName => encoded.push(Encoded::LastName { col }),
            }
        }
        Ok(Self {
            encoded,
            num_input_columns: header.len(),
            class_names,
            feature_names,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Encodes rows into a dataset. Unseen categories become all-zero
    /// indicators and out-of-range continuous values are clamped; both are
    /// counted in the returned stats.
    pub fn transform(&self, rows: &[Vec<String>]) -> Result<(Dataset, TransformStats)> {
        let n = rows.len();
        let class_index: BTreeMap<&str, usize> =
            self.class_names.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut stats = TransformStats::default();
        let mut features = FeatureMatrix::new(self.feature_names.len());
        let mut labels = Vec::with_capacity(n);
        let mut first_names = vec![None; n];
        let mut last_names = vec![None; n];
        let mut groups: Vec<GroupAttribute> = self
            .encoded
            .iter()
            .filter_map(|e| match e {
                Encoded::Group {
                    attribute,
                    positive,
                    negative,
                    ..
                } => Some(GroupAttribute::new(attribute.clone(), positive.clone(), negative.clone(), vec![None; n])),
                _ => None,
            })
            .collect();
        let mut row_buf: Vec<(usize, f64)> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != self.num_input_columns {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("expected {} cells, found {}", self.num_input_columns, row.len()),
                });
            }
            row_buf.clear();
            let mut offset = 0;
            let mut group_idx = 0;
            for e in &self.encoded {
                match e {
                    Encoded::Continuous { col, min, max } => {
                        let v = parse_number(row[*col].trim(), i, &self.feature_names[offset])?;
                        let range = max - min;
                        let mut scaled = if range > 0.0 { (v - min) / range } else { 0.0 };
                        if !(0.0..=1.0).contains(&scaled) {
                            stats.clamped_values += 1;
                            scaled = scaled.clamp(0.0, 1.0);
                        }
                        row_buf.push((offset, scaled));
                        offset += 1;
                    }
                    Encoded::Categorical { col, levels } => {
                        let value = row[*col].trim();
                        match levels.binary_search_by(|l| l.as_str().cmp(value)) {
                            Ok(pos) => row_buf.push((offset + pos, 1.0)),
                            Err(_) => stats.unseen_categories += 1,
                        }
                        offset += levels.len();
                    }
                    Encoded::Label { col } => {
                        let value = row[*col].trim();
                        let y = class_index.get(value).ok_or_else(|| Error::Parse {
                            line: i + 2,
                            message: format!("unknown label {value:?}"),
                        })?;
                        labels.push(*y);
                    }
                    Encoded::Group { col, positive, .. } => {
                        let value = row[*col].trim();
                        groups[group_idx].values[i] =
                            (!is_missing(value)).then(|| value.eq_ignore_ascii_case(positive));
                        group_idx += 1;
                    }
                    Encoded::FirstName { col } => {
                        let value = row[*col].trim();
                        first_names[i] = (!is_missing(value)).then(|| value.to_string());
                    }
                    Encoded::LastName { col } => {
                        let value = row[*col].trim();
                        last_names[i] = (!is_missing(value)).then(|| value.to_string());
                    }
                }
            }
            features.push_sparse(&row_buf)?;
        }
        let mut ds = Dataset::new(features, labels, self.feature_names.clone(), self.class_names.clone())?;
        ds.first_names = first_names;
        ds.last_names = last_names;
        ds.groups = GroupLabels::new(groups)?;
        ds.validate()?;
        Ok((ds, stats))
    }
}
