//! Single-layer softmax classifier and class-weighted cross-entropy.

use alloc::vec;
use alloc::vec::Vec;

use crate::features::{FeatureMatrix, RowView};
use crate::{Error, Result};

/// Probabilities below this are floored before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Weight matrix (`num_classes x num_features`, row-major) and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    num_classes: usize,
    num_features: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub predicted_class: usize,
}

impl Prediction {
    /// Predicted probability of `label`.
    pub fn prob_of(&self, label: usize) -> f64 {
        self.probs[label]
    }
}

/// Gradient of a scalar objective with respect to [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros(num_classes: usize, num_features: usize) -> Self {
        Self {
            weights: vec![0.0; num_classes * num_features],
            bias: vec![0.0; num_classes],
        }
    }

    /// Accumulates the contribution of one row given d(objective)/d(logits).
    pub fn add_row(&mut self, row: RowView<'_>, logit_grad: &[f64]) {
        let nf = self.weights.len() / logit_grad.len().max(1);
        for (c, &g) in logit_grad.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            self.bias[c] += g;
            let w = &mut self.weights[c * nf..(c + 1) * nf];
            for (j, x) in row.iter() {
                w[j] += g * x;
            }
        }
    }
}

impl ModelParams {
    pub fn zeros(num_classes: usize, num_features: usize) -> Self {
        Self {
            num_classes,
            num_features,
            weights: vec![0.0; num_classes * num_features],
            bias: vec![0.0; num_classes],
        }
    }

    pub fn from_parts(num_classes: usize, num_features: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != num_classes * num_features {
            return Err(Error::LengthMismatch {
                what: "weights",
                expected: num_classes * num_features,
                got: weights.len(),
            });
        }
        if bias.len() != num_classes {
            return Err(Error::LengthMismatch {
                what: "bias",
                expected: num_classes,
                got: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(Self {
            num_classes,
            num_features,
            weights,
            bias,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.weights[class * self.num_features + feature]
    }

    pub fn class_weights_row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.num_features..(class + 1) * self.num_features]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn logits_row(&self, row: RowView<'_>) -> Vec<f64> {
        let mut logits = self.bias.clone();
        for (c, l) in logits.iter_mut().enumerate() {
            let w = self.class_weights_row(c);
            *l += row.iter().map(|(j, x)| w[j] * x).sum::<f64>();
        }
        logits
    }

    pub fn forward_row(&self, row: RowView<'_>) -> Prediction {
        let probs = softmax(&self.logits_row(row));
        let predicted_class = argmax(&probs);
        Prediction {
            probs,
            predicted_class,
        }
    }

    /// Softmax of `W x + b` for a dense feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.num_features {
            return Err(Error::DimensionMismatch {
                expected: self.num_features,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input features"));
        }
        let indices: Vec<usize> = (0..x.len()).collect();
        Ok(self.forward_row(RowView { indices: &indices, values: x }))
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Vec<Prediction> {
        (0..features.num_rows()).map(|i| self.forward_row(features.row(i))).collect()
    }

    pub fn predict_classes(&self, features: &FeatureMatrix) -> Vec<usize> {
        (0..features.num_rows())
            .map(|i| argmax(&self.logits_row(features.row(i))))
            .collect()
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Inverse-frequency weights `N / (|C| * N_c)`; a balanced dataset gets all
/// ones.
pub fn class_weights(label_counts: &[usize]) -> Result<Vec<f64>> {
    if label_counts.is_empty() {
        return Err(Error::Empty("label counts"));
    }
    if let Some(c) = label_counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    let total: usize = label_counts.iter().sum();
    let nc = label_counts.len() as f64;
    Ok(label_counts
        .iter()
        .map(|&n| total as f64 / (nc * n as f64))
        .collect())
}

pub fn label_counts(labels: &[usize], num_classes: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; num_classes];
    for &y in labels {
        if y >= num_classes {
            return Err(Error::LabelOutOfRange { label: y, num_classes });
        }
        counts[y] += 1;
    }
    Ok(counts)
}

/// Mean over the batch of `-w[y] * ln(max(p[y], 1e-12))`.
pub fn weighted_cross_entropy(predictions: &[Prediction], labels: &[usize], weights: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: predictions.len(),
            got: labels.len(),
        });
    }
    let mut total = 0.0;
    for (p, &y) in predictions.iter().zip(labels) {
        if y >= p.probs.len() || y >= weights.len() {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes: p.probs.len().min(weights.len()),
            });
        }
        total -= weights[y] * libm::log(p.probs[y].max(LOG_FLOOR));
    }
    Ok(total / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGradient {
    pub loss: f64,
    pub grad: Gradients,
}

/// Weighted cross-entropy over every row of `features` and its exact
/// gradient.
pub fn loss_and_gradient(
    params: &ModelParams,
    features: &FeatureMatrix,
    labels: &[usize],
    weights: &[f64],
) -> Result<LossAndGradient> {
    let rows: Vec<usize> = (0..features.num_rows()).collect();
    if labels.len() != rows.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: rows.len(),
            got: labels.len(),
        });
    }
    loss_and_gradient_rows(params, features, &rows, labels, weights)
}

/// As [`loss_and_gradient`] restricted to the listed rows. `labels` is
/// indexed by row number, so it covers the whole matrix.
pub fn loss_and_gradient_rows(
    params: &ModelParams,
    features: &FeatureMatrix,
    rows: &[usize],
    labels: &[usize],
    weights: &[f64],
) -> Result<LossAndGradient> {
    if rows.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if features.num_cols() != params.num_features {
        return Err(Error::DimensionMismatch {
            expected: params.num_features,
            got: features.num_cols(),
        });
    }
    if weights.len() != params.num_classes {
        return Err(Error::LengthMismatch {
            what: "class weights",
            expected: params.num_classes,
            got: weights.len(),
        });
    }
    let scale = 1.0 / rows.len() as f64;
    let mut loss = 0.0;
    let mut grad = Gradients::zeros(params.num_classes, params.num_features);
    let mut logit_grad = vec![0.0; params.num_classes];
    for &i in rows {
        let y = labels[i];
        if y >= params.num_classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes: params.num_classes,
            });
        }
        let row = features.row(i);
        let pred = params.forward_row(row);
        loss -= weights[y] * libm::log(pred.probs[y].max(LOG_FLOOR));
        for (c, g) in logit_grad.iter_mut().enumerate() {
            let onehot = if c == y { 1.0 } else { 0.0 };
            *g = weights[y] * (pred.probs[c] - onehot) * scale;
        }
        grad.add_row(row, &logit_grad);
    }
    Ok(LossAndGradient {
        loss: loss * scale,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pred(probs: &[f64]) -> Prediction {
        Prediction {
            probs: probs.to_vec(),
            predicted_class: argmax(probs),
        }
    }

    #[test]
    fn zero_params_give_uniform() {
        let m = ModelParams::zeros(3, 4);
        let p = m.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        for &q in &p.probs {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(p.predicted_class, 0);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let p = softmax(&[1000.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!(p[1] >= 0.0 && p[1] < 1e-300);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn identity_weights_hand_value() {
        let m = ModelParams::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let p = m.forward(&[core::f64::consts::LN_2, 0.0]).unwrap();
        assert!((p.probs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.probs[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn forward_validates_input() {
        let m = ModelParams::zeros(2, 2);
        assert!(m.forward(&[1.0]).is_err());
        assert!(m.forward(&[1.0, f64::INFINITY]).is_err());
        assert!(ModelParams::from_parts(2, 2, vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(ModelParams::from_parts(1, 1, vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn class_weight_cases() {
        assert_eq!(class_weights(&[50, 50]).unwrap(), vec![1.0, 1.0]);
        let w = class_weights(&[90, 10]).unwrap();
        assert!((w[0] - 0.5556).abs() < 1e-3);
        assert!((w[1] - 5.0).abs() < 1e-3);
        assert_eq!(class_weights(&[10, 10, 10]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(class_weights(&[3, 0]), Err(Error::EmptyClass(1)));
    }

    #[test]
    fn cross_entropy_cases() {
        let perfect = weighted_cross_entropy(&[pred(&[1.0, 0.0])], &[0], &[1.0, 1.0]).unwrap();
        assert_eq!(perfect, 0.0);
        let half = weighted_cross_entropy(&[pred(&[0.5, 0.5])], &[0], &[1.0, 1.0]).unwrap();
        assert!((half - core::f64::consts::LN_2).abs() < 1e-12);
        let doubled = weighted_cross_entropy(&[pred(&[0.5, 0.5])], &[0], &[2.0, 1.0]).unwrap();
        assert!((doubled - 2.0 * core::f64::consts::LN_2).abs() < 1e-12);
        // floored, never infinite
        let saturated = weighted_cross_entropy(&[pred(&[1.0, 0.0])], &[1], &[1.0, 1.0]).unwrap();
        assert!((saturated + libm::log(LOG_FLOOR)).abs() < 1e-9);
        assert!(weighted_cross_entropy(&[pred(&[0.5, 0.5])], &[2], &[1.0, 1.0]).is_err());
        assert!(weighted_cross_entropy(&[], &[], &[1.0]).is_err());
    }

    #[test]
    fn zero_class_weights_zero_gradient() {
        let x = FeatureMatrix::from_dense_rows(2, &[[1.0, 2.0], [0.5, -1.0]]).unwrap();
        let m = ModelParams::from_parts(2, 2, vec![0.3, -0.2, 0.1, 0.4], vec![0.1, -0.1]).unwrap();
        let lg = loss_and_gradient(&m, &x, &[0, 1], &[0.0, 0.0]).unwrap();
        assert!(lg.grad.weights.iter().chain(&lg.grad.bias).all(|&g| g == 0.0));
    }

    #[test]
    fn symmetric_batch_gives_antisymmetric_bias_grad() {
        let x = FeatureMatrix::from_dense_rows(2, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let m = ModelParams::zeros(2, 2);
        let lg = loss_and_gradient(&m, &x, &[0, 1], &[1.0, 1.0]).unwrap();
        assert!((lg.grad.bias[0] + lg.grad.bias[1]).abs() < 1e-15);
        // a skewed batch breaks the balance but the two entries still sum to zero
        let lg = loss_and_gradient(&m, &x, &[0, 0], &[1.0, 1.0]).unwrap();
        assert!(lg.grad.bias[0] < 0.0);
        assert!((lg.grad.bias[0] + lg.grad.bias[1]).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(
            logits in prop::collection::vec(-50.0f64..50.0, 1..8),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&logits);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert_eq!(argmax(&p), argmax(&logits));
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            for (a, b) in p.iter().zip(softmax(&shifted)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn unit_weights_match_plain_cross_entropy(
            raw in prop::collection::vec((0.01f64..1.0, 0usize..3), 1..20),
        ) {
            let preds: Vec<Prediction> = raw.iter().map(|&(a, _)| {
                let rest = (1.0 - a) / 2.0;
                pred(&[a, rest, rest])
            }).collect();
            let labels: Vec<usize> = raw.iter().map(|&(_, y)| y).collect();
            let weighted = weighted_cross_entropy(&preds, &labels, &[1.0; 3]).unwrap();
            let plain: f64 = preds.iter().zip(&labels)
                .map(|(p, &y)| -libm::log(p.probs[y])).sum::<f64>() / preds.len() as f64;
            prop_assert!((weighted - plain).abs() < 1e-12);
        }
    }
}
