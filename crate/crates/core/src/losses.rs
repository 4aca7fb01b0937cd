//! Fairness penalties on the predicted probability of each record's true
//! label, and the composite training objective.
//!
//! Both penalties work per class and then average over all classes:
//!
//! * CluCL compares mean true-label probability between every ordered pair
//!   of name clusters, averaging the squared differences.
//! * CoCL takes the covariance (population form) between true-label
//!   probability and the name vector, and averages its l2 norm.
//!
//! Records whose `include_mask` entry is false are invisible to both.
//! Cluster ids and name vectors are constants; gradients flow only through
//! the probabilities.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    #[default]
    None,
    Clucl,
    Cocl,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::Clucl => "clucl",
            Variant::Cocl => "cocl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Some(Variant::None),
            "clucl" => Some(Variant::Clucl),
            "cocl" => Some(Variant::Cocl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeLossConfig {
    pub lambda: f64,
    pub variant: Variant,
}

impl CompositeLossConfig {
    pub fn new(lambda: f64, variant: Variant) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "lambda must be a nonnegative finite number, got {lambda}"
            )));
        }
        Ok(Self { lambda, variant })
    }
}

/// Per-record statistics consumed by the penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyInputs<'a> {
    pub true_label_probs: Vec<f64>,
    pub labels: Vec<usize>,
    /// Required by CluCL.
    pub cluster_ids: Vec<usize>,
    /// Required by CoCL.
    pub name_vectors: Vec<&'a [f64]>,
    pub include_mask: Vec<bool>,
}

impl<'a> PenaltyInputs<'a> {
    pub fn new(true_label_probs: Vec<f64>, labels: Vec<usize>) -> Self {
        let n = true_label_probs.len();
        Self {
            true_label_probs,
            labels,
            cluster_ids: Vec::new(),
            name_vectors: Vec::new(),
            include_mask: vec![true; n],
        }
    }

    pub fn with_clusters(mut self, cluster_ids: Vec<usize>) -> Self {
        self.cluster_ids = cluster_ids;
        self
    }

    pub fn with_name_vectors(mut self, name_vectors: Vec<&'a [f64]>) -> Self {
        self.name_vectors = name_vectors;
        self
    }

    pub fn with_mask(mut self, include_mask: Vec<bool>) -> Self {
        self.include_mask = include_mask;
        self
    }

    pub fn len(&self) -> usize {
        self.true_label_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_label_probs.is_empty()
    }

    fn validate(&self, num_classes: usize) -> Result<()> {
        let n = self.len();
        let check = |what: &'static str, got: usize| {
            if got != n {
                Err(Error::LengthMismatch { what, expected: n, got })
            } else {
                Ok(())
            }
        };
        check("labels", self.labels.len())?;
        check("include mask", self.include_mask.len())?;
        if num_classes == 0 {
            return Err(Error::InvalidParameter("num_classes must be positive".into()));
        }
        for (i, (&p, &y)) in self.true_label_probs.iter().zip(&self.labels).enumerate() {
            if !self.include_mask[i] {
                continue;
            }
            if !p.is_finite() {
                return Err(Error::NonFinite("true-label probabilities"));
            }
            if y >= num_classes {
                return Err(Error::LabelOutOfRange { label: y, num_classes });
            }
        }
        Ok(())
    }

    fn validate_clusters(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if self.cluster_ids.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "cluster ids",
                expected: self.len(),
                got: self.cluster_ids.len(),
            });
        }
        for (i, &u) in self.cluster_ids.iter().enumerate() {
            if self.include_mask[i] && u >= k {
                return Err(Error::InvalidParameter(alloc::format!(
                    "cluster id {u} out of range for k = {k}"
                )));
            }
        }
        Ok(())
    }

    fn validate_vectors(&self) -> Result<usize> {
        if self.name_vectors.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "name vectors",
                expected: self.len(),
                got: self.name_vectors.len(),
            });
        }
        let mut dim = None;
        for (v, &inc) in self.name_vectors.iter().zip(&self.include_mask) {
            if !inc {
                continue;
            }
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::DimensionMismatch { expected: d, got: v.len() })
                }
                _ => {}
            }
        }
        Ok(dim.unwrap_or(0))
    }
}

/// Per (class, cluster) sums and counts of true-label probability.
struct CellStats {
    k: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl CellStats {
    fn collect(inputs: &PenaltyInputs<'_>, k: usize, num_classes: usize) -> Self {
        let mut sums = vec![0.0; num_classes * k];
        let mut counts = vec![0; num_classes * k];
        for i in 0..inputs.len() {
            if !inputs.include_mask[i] {
                continue;
            }
            let cell = inputs.labels[i] * k + inputs.cluster_ids[i];
            sums[cell] += inputs.true_label_probs[i];
            counts[cell] += 1;
        }
        Self { k, sums, counts }
    }

    /// Means of the nonempty clusters of class `c`, as (cluster, mean).
    fn class_means(&self, c: usize) -> Vec<(usize, f64)> {
        (0..self.k)
            .filter_map(|u| {
                let cell = c * self.k + u;
                (self.counts[cell] > 0).then(|| (u, self.sums[cell] / self.counts[cell] as f64))
            })
            .collect()
    }
}

/// Cluster-constrained penalty. Ordered cluster pairs in which either cluster
/// has no members of the class are skipped and the normalizer becomes the
/// number of pairs evaluated; a class with no valid pair contributes zero.
pub fn clucl_penalty(inputs: &PenaltyInputs<'_>, k: usize, num_classes: usize) -> Result<f64> {
    inputs.validate(num_classes)?;
    inputs.validate_clusters(k)?;
    if k == 1 {
        return Ok(0.0);
    }
    let stats = CellStats::collect(inputs, k, num_classes);
    let mut total = 0.0;
    for c in 0..num_classes {
        let means = stats.class_means(c);
        let pairs = means.len() * means.len().saturating_sub(1);
        if pairs == 0 {
            continue;
        }
        let mut sum = 0.0;
        for &(u, mu) in &means {
            for &(v, mv) in &means {
                if u != v {
                    sum += (mu - mv) * (mu - mv);
                }
            }
        }
        total += sum / pairs as f64;
    }
    Ok(total / num_classes as f64)
}

struct ClassMoments {
    members: Vec<usize>,
    mean_n: Vec<f64>,
    /// Covariance vector between p and the name vector.
    cov: Vec<f64>,
    norm: f64,
}

fn cocl_moments(inputs: &PenaltyInputs<'_>, num_classes: usize, dim: usize) -> Vec<Option<ClassMoments>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for i in 0..inputs.len() {
        if inputs.include_mask[i] {
            members[inputs.labels[i]].push(i);
        }
    }
    members
        .into_iter()
        .map(|members| {
            if members.len() < 2 {
                return None;
            }
            let n = members.len() as f64;
            let mean_p = members.iter().map(|&i| inputs.true_label_probs[i]).sum::<f64>() / n;
            let mut mean_n = vec![0.0; dim];
            for &i in &members {
                for (m, v) in mean_n.iter_mut().zip(inputs.name_vectors[i]) {
                    *m += v;
                }
            }
            mean_n.iter_mut().for_each(|m| *m /= n);
            let mut cov = vec![0.0; dim];
            for &i in &members {
                let dp = inputs.true_label_probs[i] - mean_p;
                for ((c, v), m) in cov.iter_mut().zip(inputs.name_vectors[i]).zip(&mean_n) {
                    *c += dp * (v - m);
                }
            }
            cov.iter_mut().for_each(|c| *c /= n);
            let norm = libm::sqrt(cov.iter().map(|c| c * c).sum::<f64>());
            Some(ClassMoments {
                members,
                mean_n,
                cov,
                norm,
            })
        })
        .collect()
}

/// Covariance-constrained penalty: mean over classes of the l2 norm of the
/// per-class covariance between true-label probability and name vector.
/// Classes with fewer than two included members contribute zero.
pub fn cocl_penalty(inputs: &PenaltyInputs<'_>, num_classes: usize) -> Result<f64> {
    inputs.validate(num_classes)?;
    let dim = inputs.validate_vectors()?;
    let total: f64 = cocl_moments(inputs, num_classes, dim)
        .iter()
        .flatten()
        .map(|m| m.norm)
        .sum();
    Ok(total / num_classes as f64)
}

/// Value of the selected penalty; zero for [`Variant::None`].
pub fn penalty_value(inputs: &PenaltyInputs<'_>, variant: Variant, k: usize, num_classes: usize) -> Result<f64> {
    match variant {
        Variant::None => Ok(0.0),
        Variant::Clucl => clucl_penalty(inputs, k, num_classes),
        Variant::Cocl => cocl_penalty(inputs, num_classes),
    }
}

/// Exact partial derivatives of the selected penalty with respect to each
/// record's true-label probability. Masked records get zero. Where the CoCL
/// norm is exactly zero the (sub)gradient zero is returned.
pub fn penalty_gradient(inputs: &PenaltyInputs<'_>, variant: Variant, k: usize, num_classes: usize) -> Result<Vec<f64>> {
    let n = inputs.len();
    let mut grad = vec![0.0; n];
    match variant {
        Variant::None => {}
        Variant::Clucl => {
            inputs.validate(num_classes)?;
            inputs.validate_clusters(k)?;
            if k == 1 {
                return Ok(grad);
            }
            let stats = CellStats::collect(inputs, k, num_classes);
            // d l_c / d mean_u = (4 / P) * sum_{v != u} (mean_u - mean_v)
            let mut mean_grad = vec![0.0; num_classes * k];
            for c in 0..num_classes {
                let means = stats.class_means(c);
                let pairs = means.len() * means.len().saturating_sub(1);
                if pairs == 0 {
                    continue;
                }
                for &(u, mu) in &means {
                    let diff: f64 = means.iter().filter(|&&(v, _)| v != u).map(|&(_, mv)| mu - mv).sum();
                    mean_grad[c * k + u] = 4.0 * diff / pairs as f64;
                }
            }
            for (i, g) in grad.iter_mut().enumerate() {
                if !inputs.include_mask[i] {
                    continue;
                }
                let cell = inputs.labels[i] * k + inputs.cluster_ids[i];
                *g = mean_grad[cell] / stats.counts[cell] as f64 / num_classes as f64;
            }
        }
        Variant::Cocl => {
            inputs.validate(num_classes)?;
            let dim = inputs.validate_vectors()?;
            for m in cocl_moments(inputs, num_classes, dim).into_iter().flatten() {
                if m.norm == 0.0 {
                    continue;
                }
                let count = m.members.len() as f64;
                for &i in &m.members {
                    let dot: f64 = m
                        .cov
                        .iter()
                        .zip(inputs.name_vectors[i])
                        .zip(&m.mean_n)
                        .map(|((c, v), mu)| c * (v - mu))
                        .sum();
                    grad[i] = dot / (m.norm * count) / num_classes as f64;
                }
            }
        }
    }
    Ok(grad)
}

/// `base + lambda * penalty`.
pub fn total_loss(base: f64, penalty: f64, lambda: f64) -> f64 {
    base + lambda * penalty
}
