//! Bias quantification from predicted classes and evaluation-only group
//! labels: per-class true positive rates by group, TPR gaps, and their RMS
//! and maximum summaries.
//!
//! A TPR cell with no supporting records is undefined and is left out of
//! every aggregate instead of being treated as zero.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// One binary attribute. `values[i]` is `Some(true)` when record `i` has the
/// `positive` value, `Some(false)` for `negative`, `None` when unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAttribute {
    pub name: String,
    pub positive: String,
    pub negative: String,
    pub values: Vec<Option<bool>>,
}

impl GroupAttribute {
    pub fn new(name: impl Into<String>, positive: impl Into<String>, negative: impl Into<String>, values: Vec<Option<bool>>) -> Self {
        Self {
            name: name.into(),
            positive: positive.into(),
            negative: negative.into(),
            values,
        }
    }

    /// Same attribute with the roles of the two values exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            name: self.name.clone(),
            positive: self.negative.clone(),
            negative: self.positive.clone(),
            values: self.values.iter().map(|v| v.map(|b| !b)).collect(),
        }
    }

    pub fn mask(&self, positive: bool) -> Vec<bool> {
        self.values.iter().map(|v| *v == Some(positive)).collect()
    }
}

/// Sidecar group labels. Never joined into classifier features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupLabels {
    attributes: Vec<GroupAttribute>,
}

impl GroupLabels {
    pub fn new(attributes: Vec<GroupAttribute>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::InvalidParameter(alloc::format!("duplicate attribute {:?}", a.name)));
            }
        }
        Ok(Self { attributes })
    }

    pub fn attributes(&self) -> &[GroupAttribute] {
        &self.attributes
    }

    pub fn get(&self, name: &str) -> Option<&GroupAttribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Adds or replaces the attribute with the same name.
    pub fn set(&mut self, attribute: GroupAttribute) {
        match self.attributes.iter_mut().find(|a| a.name == attribute.name) {
            Some(slot) => *slot = attribute,
            None => self.attributes.push(attribute),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            attributes: self
                .attributes
                .iter()
                .map(|a| GroupAttribute {
                    values: rows.iter().map(|&i| a.values[i]).collect(),
                    ..a.clone()
                })
                .collect(),
        }
    }
}

/// Fraction of masked records with true label `class` that were predicted
/// as `class`; `None` when no masked record has that label.
pub fn tpr(predicted: &[usize], labels: &[usize], group_mask: &[bool], class: usize) -> Option<f64> {
    let mut support = 0usize;
    let mut hits = 0usize;
    for ((&p, &y), &m) in predicted.iter().zip(labels).zip(group_mask) {
        if m && y == class {
            support += 1;
            if p == class {
                hits += 1;
            }
        }
    }
    (support > 0).then(|| hits as f64 / support as f64)
}

/// Root mean square of the defined gaps.
pub fn gap_rms(gaps: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = gaps.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Undefined("every gap is undefined"));
    }
    let mean_sq = defined.iter().map(|g| g * g).sum::<f64>() / defined.len() as f64;
    Ok(libm::sqrt(mean_sq))
}

/// Unweighted mean of per-class TPRs; every class must appear in `labels`.
pub fn balanced_tpr(predicted: &[usize], labels: &[usize], num_classes: usize) -> Result<f64> {
    if predicted.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "predictions",
            expected: labels.len(),
            got: predicted.len(),
        });
    }
    if num_classes == 0 {
        return Err(Error::InvalidParameter("num_classes must be positive".into()));
    }
    let all = vec![true; labels.len()];
    let mut total = 0.0;
    for c in 0..num_classes {
        total += tpr(predicted, labels, &all, c).ok_or(Error::EmptyClass(c))?;
    }
    Ok(total / num_classes as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCell {
    pub attribute: String,
    pub class: usize,
    pub tpr_positive: Option<f64>,
    pub tpr_negative: Option<f64>,
    /// `tpr_positive - tpr_negative`, defined when both sides are.
    pub gap: Option<f64>,
    pub support_positive: usize,
    pub support_negative: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSummary {
    pub name: String,
    pub positive: String,
    pub negative: String,
    pub gap_rms: Option<f64>,
    pub gap_max: Option<f64>,
    pub defined_gaps: usize,
    pub undefined_gaps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub num_classes: usize,
    pub cells: Vec<GapCell>,
    pub attributes: Vec<AttributeSummary>,
    /// `None` when some class has no records.
    pub balanced_tpr: Option<f64>,
}

impl BiasReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeSummary> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn cell(&self, attribute: &str, class: usize) -> Option<&GapCell> {
        self.cells.iter().find(|c| c.attribute == attribute && c.class == class)
    }
}

/// Full report: one gap cell per (attribute, class), RMS and max of |gap|
/// per attribute, and the overall balanced TPR.
pub fn bias_report(predicted: &[usize], labels: &[usize], num_classes: usize, groups: &GroupLabels) -> Result<BiasReport> {
    let n = labels.len();
    if predicted.len() != n {
        return Err(Error::LengthMismatch {
            what: "predictions",
            expected: n,
            got: predicted.len(),
        });
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= num_classes) {
        return Err(Error::LabelOutOfRange { label: y, num_classes });
    }
    let mut cells = Vec::new();
    let mut attributes = Vec::new();
    for attr in groups.attributes() {
        if attr.values.len() != n {
            return Err(Error::LengthMismatch {
                what: "group labels",
                expected: n,
                got: attr.values.len(),
            });
        }
        let pos = attr.mask(true);
        let neg = attr.mask(false);
        let mut gaps = Vec::with_capacity(num_classes);
        for c in 0..num_classes {
            let support = |mask: &[bool]| labels.iter().zip(mask).filter(|&(&y, &m)| m && y == c).count();
            let tp = tpr(predicted, labels, &pos, c);
            let tn = tpr(predicted, labels, &neg, c);
            let gap = match (tp, tn) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
            gaps.push(gap);
            cells.push(GapCell {
                attribute: attr.name.clone(),
                class: c,
                tpr_positive: tp,
                tpr_negative: tn,
                gap,
                support_positive: support(&pos),
                support_negative: support(&neg),
            });
        }
        let defined = gaps.iter().flatten().count();
        attributes.push(AttributeSummary {
            name: attr.name.clone(),
            positive: attr.positive.clone(),
            negative: attr.negative.clone(),
            gap_rms: gap_rms(&gaps).ok(),
            gap_max: gaps.iter().flatten().map(|g| g.abs()).reduce(f64::max),
            defined_gaps: defined,
            undefined_gaps: num_classes - defined,
        });
    }
    if attributes.iter().all(|a| a.gap_rms.is_none()) {
        return Err(Error::Undefined("no attribute has a defined gap"));
    }
    Ok(BiasReport {
        num_classes,
        cells,
        attributes,
        balanced_tpr: balanced_tpr(predicted, labels, num_classes).ok(),
    })
}
