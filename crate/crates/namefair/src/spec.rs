//! Experiment description, read from a TOML file and/or command-line flags.
//!
//! ```toml
//! data = "adult.csv"
//! schema = "adult.schema"
//! embeddings = "vectors.txt"
//! names_demographics = "names/"
//! variant = "cocl"
//! lambda = 2.0
//! seeds = [1, 2, 3, 4]
//! lambdas = [0.0, 1.0, 2.0]
//! out = "runs/adult-cocl"
//! ```
//!
//! Relative paths in a file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use namefair_core::{TrainConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::read_to_string;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Tabular CSV (with `schema`), biography TSV, or dataset cache.
    pub data: Option<PathBuf>,
    /// Separate test file in the same format as `data`.
    pub test_data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Directory holding `first_white.tsv`, `first_male.tsv` and
    /// `last_white.tsv`.
    pub names_demographics: Option<PathBuf>,
    pub scrub: bool,
    pub min_count: usize,
    pub top_fraction: f64,
    pub variant: String,
    pub lambda: f64,
    pub k: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub l2: f64,
    pub seeds: Vec<u64>,
    pub lambdas: Vec<f64>,
    pub split_seed: u64,
    /// Seed for synthetic name assignment and race-label sampling.
    pub name_seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            data: None,
            test_data: None,
            schema: None,
            embeddings: None,
            names_demographics: None,
            scrub: false,
            min_count: 20,
            top_fraction: 0.1,
            variant: "none".into(),
            lambda: 0.0,
            k: t.k,
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.learning_rate,
            l2: t.l2_coeff,
            seeds: vec![0],
            lambdas: Vec::new(),
            split_seed: 0,
            name_seed: 0,
            out: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let mut spec: Self =
            toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut spec.data,
            &mut spec.test_data,
            &mut spec.schema,
            &mut spec.embeddings,
            &mut spec.names_demographics,
            &mut spec.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn variant(&self) -> Result<Variant> {
        Variant::parse(&self.variant)
            .ok_or_else(|| CliError::validation(format!("unknown variant {:?} (expected none, clucl or cocl)", self.variant)))
    }

    pub fn validate(&self) -> Result<()> {
        self.variant()?;
        if self.seeds.is_empty() {
            return Err(CliError::validation("at least one seed is required"));
        }
        if let Some(l) = self.lambdas.iter().chain([&self.lambda]).find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(CliError::validation(format!("lambda must be a nonnegative number, got {l}")));
        }
        if self.min_count == 0 {
            return Err(CliError::validation("min_count must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.top_fraction) {
            return Err(CliError::validation(format!("top_fraction must lie in [0, 1), got {}", self.top_fraction)));
        }
        self.train_config(self.seeds[0], self.lambda)?
            .validate()
            .map_err(|e| CliError::validation(e.to_string()))
    }

    pub fn train_config(&self, seed: u64, lambda: f64) -> Result<TrainConfig> {
        Ok(TrainConfig {
            lambda,
            variant: self.variant()?,
            k: self.k,
            learning_rate: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            l2_coeff: self.l2,
            ..TrainConfig::default()
        })
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().ok_or_else(|| CliError::validation("no dataset given (--data)"))
    }

    pub fn embeddings_path(&self) -> Result<&Path> {
        self.embeddings.as_deref().ok_or_else(|| CliError::validation("no embedding file given (--embeddings)"))
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| CliError::validation("no output directory given (--out)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_validation() {
        let spec = ExperimentSpec {
            variant: "cocl".into(),
            lambdas: vec![0.0, 1.0],
            ..ExperimentSpec::default()
        };
        let back: ExperimentSpec = toml::from_str(&spec.to_toml()).unwrap();
        assert_eq!(back, spec);
        assert!(spec.validate().is_ok());
        assert!(ExperimentSpec { seeds: vec![], ..spec.clone() }.validate().is_err());
        assert!(ExperimentSpec { lambdas: vec![-1.0], ..spec.clone() }.validate().is_err());
        assert!(ExperimentSpec { variant: "x".into(), ..spec }.validate().is_err());
        assert!(toml::from_str::<ExperimentSpec>("bogus = 1").is_err());
    }
}
