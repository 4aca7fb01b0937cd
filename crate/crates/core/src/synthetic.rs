//! Constructed fairness benchmark with a latent binary attribute.
//!
//! The attribute shifts one "proxy" feature, decides which of two
//! well-separated embedding blobs each record's name vector comes from, and
//! drives attribute-correlated label noise: positives with the attribute are
//! flipped to negative, negatives without it are flipped to positive. An
//! unconstrained classifier picks up the proxy feature and shows a large TPR
//! gap between the two attribute values.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::embeddings::EmbeddingTable;
use crate::features::FeatureMatrix;
use crate::losses::Variant;
use crate::metrics::{GroupAttribute, GroupLabels};
use crate::training::TrainConfig;
use crate::Result;

/// Name of the evaluation attribute attached to the generated dataset.
pub const ATTRIBUTE: &str = "group";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub records: usize,
    pub features: usize,
    pub embedding_dim: usize,
    /// Distance between the two blob centers.
    pub blob_separation: f64,
    pub blob_std: f64,
    /// Mean shift of the proxy feature between attribute values.
    pub proxy_shift: f64,
    /// Probability of flipping a label in the attribute-favoured direction.
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            records: 2000,
            features: 20,
            embedding_dim: 16,
            blob_separation: 1.0,
            blob_std: 0.1,
            proxy_shift: 2.0,
            noise_rate: 0.35,
            seed: 2019,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub dataset: Dataset,
    pub embeddings: EmbeddingTable,
    /// Index of the feature shifted by the latent attribute.
    pub proxy_feature: usize,
    pub latent: Vec<bool>,
}

/// Training settings the benchmark is calibrated for.
pub fn train_config(variant: Variant, k: usize, lambda: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        lambda,
        variant,
        k,
        learning_rate: 0.005,
        batch_size: 128,
        epochs: 30,
        seed,
        ..TrainConfig::default()
    }
}

const SIGNAL: [f64; 5] = [1.0, -0.8, 0.6, 0.5, -0.4];

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticBenchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let nf = config.features.max(SIGNAL.len() + 1);
    let dim = config.embedding_dim.max(1);
    let half = 0.5 * config.blob_separation / libm::sqrt(dim as f64);

    let mut rows = Vec::with_capacity(config.records);
    let mut labels = Vec::with_capacity(config.records);
    let mut latent = Vec::with_capacity(config.records);
    let mut vectors = Vec::with_capacity(config.records);
    for _ in 0..config.records {
        let a = normal() > 0.0;
        let mut x: Vec<f64> = (0..nf).map(|_| normal()).collect();
        x[0] = 0.5 * x[0] + if a { config.proxy_shift } else { 0.0 };
        let score: f64 = SIGNAL.iter().zip(&x[1..]).map(|(b, v)| b * v).sum::<f64>() + 0.3 * normal();
        let center = if a { half } else { -half };
        let v: Vec<f64> = (0..dim).map(|_| center + config.blob_std * normal()).collect();
        rows.push(x);
        latent.push(a);
        vectors.push(v);
        labels.push(usize::from(score > 0.0));
    }
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    for (y, &a) in labels.iter_mut().zip(&latent) {
        let flip = noise_rng.random::<f64>() < config.noise_rate;
        if flip && a && *y == 1 {
            *y = 0;
        } else if flip && !a && *y == 0 {
            *y = 1;
        }
    }

    let features = FeatureMatrix::from_dense_rows(nf, &rows)?;
    let mut feature_names: Vec<String> = (0..nf).map(|j| format!("x{j}")).collect();
    feature_names[0] = "proxy".to_string();
    let mut dataset = Dataset::new(features, labels, feature_names, vec!["0".to_string(), "1".to_string()])?;
    let mut embeddings = EmbeddingTable::new(dim)?;
    for (i, v) in vectors.into_iter().enumerate() {
        let name = format!("name{i}");
        embeddings.insert(&name, v)?;
        dataset.first_names[i] = Some(name);
    }
    dataset.groups = GroupLabels::new(vec![GroupAttribute::new(
        ATTRIBUTE,
        "a",
        "not-a",
        latent.iter().map(|&a| Some(a)).collect(),
    )])?;
    Ok(SyntheticBenchmark {
        dataset,
        embeddings,
        proxy_feature: 0,
        latent,
    })
}
