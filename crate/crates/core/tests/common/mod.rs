//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written directly from the definitions, with no calls
//! into the library under test beyond plain data types.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Central differences of `f` at `x`.
pub fn numeric_gradient(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `||a - b|| / max(||a|| + ||b||, tiny)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a) + norm(b);
    if scale < 1e-300 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Mean weighted cross-entropy of a linear softmax model, computed from
/// scratch on dense inputs.
pub fn cross_entropy_oracle(w: &[f64], b: &[f64], x: &[Vec<f64>], y: &[usize], class_w: &[f64]) -> f64 {
    let c = b.len();
    let d = x[0].len();
    let mut total = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let logits: Vec<f64> = (0..c)
            .map(|k| b[k] + (0..d).map(|j| w[k * d + j] * row[j]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|h| (h - m).exp()).sum();
        let p = (logits[label] - m).exp() / z;
        total -= class_w[label] * p.max(1e-12).ln();
    }
    total / x.len() as f64
}

pub fn softmax_true_prob(w: &[f64], b: &[f64], row: &[f64], label: usize) -> f64 {
    let c = b.len();
    let d = row.len();
    let logits: Vec<f64> = (0..c)
        .map(|k| b[k] + (0..d).map(|j| w[k * d + j] * row[j]).sum::<f64>())
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|h| (h - m).exp()).sum();
    (logits[label] - m).exp() / z
}

/// Cluster-based penalty straight from its definition.
pub fn clucl_oracle(p: &[f64], y: &[usize], cluster: &[usize], include: &[bool], k: usize, classes: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..classes {
        let mut means = Vec::new();
        for u in 0..k {
            let members: Vec<f64> = (0..p.len())
                .filter(|&i| include[i] && y[i] == c && cluster[i] == u)
                .map(|i| p[i])
                .collect();
            if !members.is_empty() {
                means.push(members.iter().sum::<f64>() / members.len() as f64);
            }
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for (a, ma) in means.iter().enumerate() {
            for (b, mb) in means.iter().enumerate() {
                if a != b {
                    sum += (ma - mb) * (ma - mb);
                    pairs += 1;
                }
            }
        }
        if pairs > 0 {
            total += sum / pairs as f64;
        }
    }
    total / classes as f64
}

/// Covariance-based penalty straight from its definition.
pub fn cocl_oracle(p: &[f64], y: &[usize], names: &[Vec<f64>], include: &[bool], classes: usize) -> f64 {
    let dim = names[0].len();
    let mut total = 0.0;
    for c in 0..classes {
        let idx: Vec<usize> = (0..p.len()).filter(|&i| include[i] && y[i] == c).collect();
        if idx.len() < 2 {
            continue;
        }
        let n = idx.len() as f64;
        let mp = idx.iter().map(|&i| p[i]).sum::<f64>() / n;
        let mut sq = 0.0;
        for j in 0..dim {
            let mn = idx.iter().map(|&i| names[i][j]).sum::<f64>() / n;
            let cov = idx.iter().map(|&i| (p[i] - mp) * (names[i][j] - mn)).sum::<f64>() / n;
            sq += cov * cov;
        }
        total += sq.sqrt();
    }
    total / classes as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCell {
    pub tpr_pos: Option<f64>,
    pub tpr_neg: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAttribute {
    pub cells: Vec<OracleCell>,
    pub rms: Option<f64>,
    pub max: Option<f64>,
}

fn count_tpr(pred: &[usize], y: &[usize], values: &[Option<bool>], want: bool, class: usize) -> Option<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for i in 0..y.len() {
        if values[i] == Some(want) && y[i] == class {
            total += 1;
            if pred[i] == class {
                hits += 1;
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(hits as f64 / total as f64)
    }
}

/// Brute-force TPR gaps for one attribute.
pub fn attribute_oracle(pred: &[usize], y: &[usize], values: &[Option<bool>], classes: usize) -> OracleAttribute {
    let cells: Vec<OracleCell> = (0..classes)
        .map(|c| {
            let tpr_pos = count_tpr(pred, y, values, true, c);
            let tpr_neg = count_tpr(pred, y, values, false, c);
            let gap = match (tpr_pos, tpr_neg) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
            OracleCell { tpr_pos, tpr_neg, gap }
        })
        .collect();
    let gaps: Vec<f64> = cells.iter().filter_map(|c| c.gap).collect();
    let (rms, max) = if gaps.is_empty() {
        (None, None)
    } else {
        let rms = (gaps.iter().map(|g| g * g).sum::<f64>() / gaps.len() as f64).sqrt();
        let max = gaps.iter().map(|g| g.abs()).fold(0.0, f64::max);
        (Some(rms), Some(max))
    };
    OracleAttribute { cells, rms, max }
}

pub fn balanced_tpr_oracle(pred: &[usize], y: &[usize], classes: usize) -> Option<f64> {
    let all = vec![Some(true); y.len()];
    let mut sum = 0.0;
    for c in 0..classes {
        sum += count_tpr(pred, y, &all, true, c)?;
    }
    Some(sum / classes as f64)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Plain Lloyd iterations from `k` distinct points picked uniformly at
/// random, run until assignments stop changing. Returns the inertia.
pub fn lloyd_oracle(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    distinct.shuffle(rng);
    let mut centers: Vec<Vec<f64>> = distinct[..k].iter().map(|p| (*p).clone()).collect();
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..1000 {
        let next: Vec<usize> = points
            .iter()
            .map(|p| {
                (0..k)
                    .min_by(|&a, &b| sq_dist(p, &centers[a]).partial_cmp(&sq_dist(p, &centers[b])).unwrap())
                    .unwrap()
            })
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for (j, v) in center.iter_mut().enumerate() {
                *v = members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    points.iter().zip(&assign).map(|(p, &a)| sq_dist(p, &centers[a])).sum()
}

pub fn best_lloyd_oracle(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    (0..restarts).map(|_| lloyd_oracle(points, k, &mut r)).fold(f64::INFINITY, f64::min)
}

/// Exact optimum over every assignment of points to at most `k` labels.
pub fn exhaustive_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut cost = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            let dim = members[0].len();
            let mean: Vec<f64> = (0..dim).map(|j| members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64).collect();
            cost += members.iter().map(|m| sq_dist(m, &mean)).sum::<f64>();
        }
        best = best.min(cost);
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}
