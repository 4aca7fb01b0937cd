//! Datasets and preprocessing: tabular encoding, bag-of-words text,
//! synthetic and inferred group labels for evaluation, seeded splits.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{name_vector, normalize_token, EmbeddingTable, NameVector};
use crate::features::FeatureMatrix;
use crate::metrics::GroupLabels;
use crate::{Error, Result};

pub mod names;
pub mod tabular;
pub mod text;

pub use names::{
    assign_synthetic_names, infer_gender_from_pronouns, infer_race_labels, partition_names, NameDemographics,
    NamePartition,
};
pub use tabular::{ColumnRole, TabularEncoder, TabularSchema, TransformStats};
pub use text::{scrub, tokenize, vectorize_text, Vocabulary};

/// Features, labels, names and evaluation-only group labels for a set of
/// records. Names feed only the training penalty; groups feed only metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub first_names: Vec<Option<String>>,
    pub last_names: Vec<Option<String>>,
    pub groups: GroupLabels,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        let ds = Self {
            features,
            labels,
            first_names: alloc::vec![None; n],
            last_names: alloc::vec![None; n],
            groups: GroupLabels::default(),
            feature_names,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        let check = |what: &'static str, got: usize, expected: usize| {
            if got != expected {
                Err(Error::LengthMismatch { what, expected, got })
            } else {
                Ok(())
            }
        };
        check("feature rows", self.features.num_rows(), n)?;
        check("first names", self.first_names.len(), n)?;
        check("last names", self.last_names.len(), n)?;
        check("feature names", self.feature_names.len(), self.features.num_cols())?;
        for a in self.groups.attributes() {
            check("group labels", a.values.len(), n)?;
        }
        let nc = self.class_names.len();
        if let Some(&y) = self.labels.iter().find(|&&y| y >= nc) {
            return Err(Error::LabelOutOfRange { label: y, num_classes: nc });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.num_cols()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            first_names: rows.iter().map(|&i| self.first_names[i].clone()).collect(),
            last_names: rows.iter().map(|&i| self.last_names[i].clone()).collect(),
            groups: self.groups.select_rows(rows),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn name_vectors(&self, table: &EmbeddingTable) -> Vec<NameVector> {
        self.first_names
            .iter()
            .zip(&self.last_names)
            .map(|(f, l)| name_vector(table, f.as_deref(), l.as_deref()))
            .collect()
    }

    /// Normalized name tokens, for restricting an embedding load.
    pub fn name_tokens(&self) -> BTreeSet<String> {
        self.first_names
            .iter()
            .chain(&self.last_names)
            .flatten()
            .map(|t| normalize_token(t))
            .filter(|t| !t.is_empty())
            .collect()
    }
}

/// Row indices of a seeded train/validation/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with `seed` and cuts it into train/validation/test parts
/// of `floor(n * train_frac)`, `floor(n * val_frac)` and the remainder.
pub fn split_indices(n: usize, seed: u64, train_frac: f64, val_frac: f64) -> Result<Split> {
    if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "invalid split fractions {train_frac} / {val_frac}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * train_frac) as usize;
    let n_val = (n as f64 * val_frac) as usize;
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    Ok(Split {
        train: idx,
        validation,
        test,
    })
}

/// The default 80/10/10 split.
pub fn default_split(n: usize, seed: u64) -> Split {
    split_indices(n, seed, 0.8, 0.1).expect("valid default fractions")
}
