//! Mini-batch Adam training of the softmax classifier on weighted
//! cross-entropy plus a lambda-scaled fairness penalty.
//!
//! Names only enter through the penalty. The trained parameters act on the
//! feature matrix alone, so predictions never depend on names.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::{kmeans, ClusterModel, KMeansConfig};
use crate::data::Dataset;
use crate::embeddings::{EmbeddingTable, NameVector};
use crate::losses::{penalty_gradient, penalty_value, total_loss, PenaltyInputs, Variant};
use crate::metrics::balanced_tpr;
use crate::features::FeatureMatrix;
use crate::model::{class_weights, label_counts, loss_and_gradient_rows, LossAndGradient, ModelParams, LOG_FLOOR};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub variant: Variant,
    /// Number of name clusters for CluCL.
    pub k: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Coefficient of `0.5 * ||W||^2`; the bias is not regularized.
    pub l2_coeff: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// k-means++ restarts used when clustering names.
    pub kmeans_restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            variant: Variant::None,
            k: 12,
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 50,
            seed: 0,
            l2_coeff: 0.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            kmeans_restarts: KMeansConfig::default().restarts,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidParameter(m));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if !(self.l2_coeff >= 0.0) || !self.l2_coeff.is_finite() {
            return bad(format!("l2 coefficient must be nonnegative, got {}", self.l2_coeff));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.variant == Variant::Clucl && self.k == 0 {
            return bad("k must be positive".into());
        }
        self.adam().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub base_loss: f64,
    pub penalty: f64,
    pub total_loss: f64,
    pub val_balanced_tpr: Option<f64>,
}

/// One record per epoch, evaluated on the full training set at the end of
/// the epoch (penalty included even when lambda is zero).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: TrainHistory,
    /// Name clusters, for CluCL only.
    pub clusters: Option<ClusterModel>,
    /// Frozen cluster per training record (`None` when excluded).
    pub record_clusters: Vec<Option<usize>>,
}

/// Computes name vectors from `embeddings` and trains.
pub fn train(
    dataset: &Dataset,
    embeddings: &EmbeddingTable,
    config: &TrainConfig,
    validation: Option<&Dataset>,
) -> Result<TrainOutcome> {
    let names = dataset.name_vectors(embeddings);
    train_with_name_vectors(dataset, &names, config, validation)
}

/// Penalty data indexed by record number over a whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTerm<'a> {
    pub variant: Variant,
    pub lambda: f64,
    pub k: usize,
    pub num_classes: usize,
    pub vectors: Vec<&'a [f64]>,
    pub include: Vec<bool>,
    /// Frozen cluster per record; ignored for excluded records.
    pub clusters: Vec<usize>,
}

impl<'a> PenaltyTerm<'a> {
    fn inputs(&self, rows: &[usize], probs: Vec<f64>, labels: &[usize]) -> PenaltyInputs<'a> {
        let mut inputs = PenaltyInputs::new(probs, rows.iter().map(|&i| labels[i]).collect())
            .with_mask(rows.iter().map(|&i| self.include[i]).collect());
        match self.variant {
            Variant::Clucl => inputs = inputs.with_clusters(rows.iter().map(|&i| self.clusters[i]).collect()),
            Variant::Cocl => inputs = inputs.with_name_vectors(rows.iter().map(|&i| self.vectors[i]).collect()),
            Variant::None => {}
        }
        inputs
    }

    fn active(&self) -> bool {
        self.lambda > 0.0 && self.variant != Variant::None
    }
}

/// Mini-batch objective `mean weighted cross-entropy + lambda * penalty`
/// over `rows` and its gradient. `labels` is indexed by record number. The
/// penalty is skipped entirely when lambda is zero or the variant is none.
pub fn batch_loss_and_gradient(
    params: &ModelParams,
    features: &FeatureMatrix,
    labels: &[usize],
    rows: &[usize],
    class_weights: &[f64],
    penalty: &PenaltyTerm<'_>,
) -> Result<LossAndGradient> {
    let base = loss_and_gradient_rows(params, features, rows, labels, class_weights)?;
    if !penalty.active() {
        return Ok(base);
    }
    let LossAndGradient { mut loss, mut grad } = base;
    let preds: Vec<_> = rows.iter().map(|&i| params.forward_row(features.row(i))).collect();
    let probs = rows.iter().zip(&preds).map(|(&i, p)| p.probs[labels[i]]).collect();
    let inputs = penalty.inputs(rows, probs, labels);
    let pen_grad = penalty_gradient(&inputs, penalty.variant, penalty.k, penalty.num_classes)?;
    loss += penalty.lambda * penalty_value(&inputs, penalty.variant, penalty.k, penalty.num_classes)?;
    let mut logit_grad = vec![0.0; params.num_classes()];
    for ((&i, p), &pg) in rows.iter().zip(&preds).zip(&pen_grad) {
        let dpen = penalty.lambda * pg;
        if dpen == 0.0 {
            continue;
        }
        // d p_y / d h_c = p_y (1[c = y] - p_c)
        let y = labels[i];
        let py = p.probs[y];
        for (c, g) in logit_grad.iter_mut().enumerate() {
            let onehot = if c == y { 1.0 } else { 0.0 };
            *g = dpen * py * (onehot - p.probs[c]);
        }
        grad.add_row(features.row(i), &logit_grad);
    }
    Ok(LossAndGradient { loss, grad })
}

/// Trains with precomputed name vectors (one per record of `dataset`).
pub fn train_with_name_vectors(
    dataset: &Dataset,
    names: &[NameVector],
    config: &TrainConfig,
    validation: Option<&Dataset>,
) -> Result<TrainOutcome> {
    config.validate()?;
    dataset.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if names.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            what: "name vectors",
            expected: dataset.len(),
            got: names.len(),
        });
    }
    let n = dataset.len();
    let num_classes = dataset.num_classes();
    let include: Vec<bool> = names.iter().map(NameVector::is_included).collect();

    let (clusters, record_clusters) = if config.variant == Variant::Clucl {
        let members: Vec<usize> = (0..n).filter(|&i| include[i]).collect();
        let points: Vec<Vec<f64>> = members.iter().map(|&i| names[i].vector.clone()).collect();
        let km = KMeansConfig {
            k: config.k,
            seed: config.seed,
            restarts: config.kmeans_restarts,
            ..KMeansConfig::default()
        };
        let model = kmeans(&points, &km)?;
        let mut per_record = vec![None; n];
        for (&i, &c) in members.iter().zip(&model.assignments) {
            per_record[i] = Some(c);
        }
        (Some(model), per_record)
    } else {
        (None, vec![None; n])
    };

    let ctx = PenaltyTerm {
        variant: config.variant,
        lambda: config.lambda,
        k: config.k,
        num_classes,
        vectors: names.iter().map(|v| v.vector.as_slice()).collect(),
        include,
        clusters: record_clusters.iter().map(|c| c.unwrap_or(0)).collect(),
    };

    let weights = class_weights(&label_counts(&dataset.labels, num_classes)?)?;
    let nf = dataset.num_features();
    let mut params = ModelParams::zeros(num_classes, nf);
    let mut state = AdamState::new(&params);
    let adam = config.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory::default();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let LossAndGradient { loss, mut grad } =
                batch_loss_and_gradient(&params, &dataset.features, &dataset.labels, rows, &weights, &ctx)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            if config.l2_coeff > 0.0 {
                for (g, w) in grad.weights.iter_mut().zip(&params.weights) {
                    *g += config.l2_coeff * w;
                }
            }
            adam_step(&mut params, &grad, &mut state, &adam).map_err(|e| match e {
                Error::NonFinite(_) => Error::NonFiniteLoss { epoch, batch: b },
                other => other,
            })?;
            if !params.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
        }
        history.epochs.push(epoch_record(epoch, dataset, &params, &weights, &ctx, config.lambda, validation)?);
    }

    Ok(TrainOutcome {
        params,
        history,
        clusters,
        record_clusters,
    })
}

fn epoch_record(
    epoch: usize,
    dataset: &Dataset,
    params: &ModelParams,
    weights: &[f64],
    ctx: &PenaltyTerm<'_>,
    lambda: f64,
    validation: Option<&Dataset>,
) -> Result<EpochRecord> {
    let n = dataset.len();
    let preds = params.predict(&dataset.features);
    let probs: Vec<f64> = preds.iter().zip(&dataset.labels).map(|(p, &y)| p.probs[y]).collect();
    let base = probs
        .iter()
        .zip(&dataset.labels)
        .map(|(&p, &y)| -weights[y] * libm::log(p.max(LOG_FLOOR)))
        .sum::<f64>()
        / n as f64;
    let rows: Vec<usize> = (0..n).collect();
    let penalty = penalty_value(&ctx.inputs(&rows, probs, &dataset.labels), ctx.variant, ctx.k, ctx.num_classes)?;
    let total = total_loss(base, penalty, lambda);
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss { epoch, batch: 0 });
    }
    let val_balanced_tpr = validation.and_then(|v| {
        let predicted = params.predict_classes(&v.features);
        balanced_tpr(&predicted, &v.labels, v.num_classes()).ok()
    });
    Ok(EpochRecord {
        epoch,
        base_loss: base,
        penalty,
        total_loss: total,
        val_balanced_tpr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::Coverage;
    use crate::features::FeatureMatrix;
    use alloc::string::ToString;

    fn toy(n: usize) -> (Dataset, Vec<NameVector>) {
        // label is the sign of x0 - x1; names carry a weak copy of x0
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut names = Vec::new();
        for i in 0..n {
            let a = ((i * 37) % 101) as f64 / 101.0;
            let b = ((i * 53) % 97) as f64 / 97.0;
            rows.push([a, b, 1.0]);
            labels.push(usize::from(a > b));
            names.push(NameVector {
                vector: vec![a, 1.0 - a],
                coverage: if i % 7 == 0 { Coverage::None } else { Coverage::FirstOnly },
            });
        }
        let x = FeatureMatrix::from_dense_rows(3, &rows).unwrap();
        let ds = Dataset::new(
            x,
            labels,
            vec!["a".to_string(), "b".to_string(), "one".to_string()],
            vec!["neg".to_string(), "pos".to_string()],
        )
        .unwrap();
        (ds, names)
    }

    #[test]
    fn zero_lambda_matches_baseline_exactly() {
        let (ds, names) = toy(120);
        let base = TrainConfig {
            epochs: 5,
            batch_size: 16,
            learning_rate: 0.05,
            seed: 11,
            ..TrainConfig::default()
        };
        let none = train_with_name_vectors(&ds, &names, &base, None).unwrap();
        for variant in [Variant::Cocl, Variant::Clucl] {
            let cfg = TrainConfig { variant, k: 2, ..base };
            let out = train_with_name_vectors(&ds, &names, &cfg, None).unwrap();
            assert_eq!(out.params, none.params);
        }
    }

    #[test]
    fn training_is_deterministic_and_finite() {
        let (ds, names) = toy(100);
        let cfg = TrainConfig {
            variant: Variant::Cocl,
            lambda: 1.0,
            epochs: 4,
            batch_size: 32,
            learning_rate: 0.05,
            l2_coeff: 1e-3,
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train_with_name_vectors(&ds, &names, &cfg, Some(&ds)).unwrap();
        let b = train_with_name_vectors(&ds, &names, &cfg, Some(&ds)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.epochs.len(), 4);
        for r in &a.history.epochs {
            assert!(r.total_loss.is_finite());
            assert!((r.total_loss - (r.base_loss + r.penalty)).abs() < 1e-12);
            assert!(r.val_balanced_tpr.is_some());
        }
    }

    #[test]
    fn clucl_freezes_clusters_and_skips_unnamed() {
        let (ds, names) = toy(70);
        let cfg = TrainConfig {
            variant: Variant::Clucl,
            lambda: 1.0,
            k: 3,
            epochs: 2,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let out = train_with_name_vectors(&ds, &names, &cfg, None).unwrap();
        let clusters = out.clusters.unwrap();
        assert_eq!(clusters.k, 3);
        for (i, c) in out.record_clusters.iter().enumerate() {
            assert_eq!(c.is_none(), i % 7 == 0);
        }
    }

    #[test]
    fn config_and_input_errors() {
        let (ds, names) = toy(10);
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(train_with_name_vectors(&ds, &names, &bad, None).is_err());
        let bad = TrainConfig {
            lambda: -1.0,
            ..TrainConfig::default()
        };
        assert!(train_with_name_vectors(&ds, &names, &bad, None).is_err());
        assert!(train_with_name_vectors(&ds, &names[..3], &TrainConfig::default(), None).is_err());
        let cfg = TrainConfig {
            variant: Variant::Clucl,
            lambda: 1.0,
            k: 500,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_with_name_vectors(&ds, &names, &cfg, None),
            Err(Error::InsufficientDistinctPoints { .. })
        ));
    }

    #[test]
    fn huge_learning_rate_is_reported_not_propagated() {
        let (ds, names) = toy(50);
        let cfg = TrainConfig {
            learning_rate: 1e308,
            epochs: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_with_name_vectors(&ds, &names, &cfg, None),
            Err(Error::NonFiniteLoss { .. })
        ));
    }
}
