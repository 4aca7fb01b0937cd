//! k-means with k-means++ seeding over name vectors.
//!
//! Clustering runs once on the training-set name vectors; the resulting
//! assignments are frozen for the rest of training.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    /// Independent k-means++ restarts; the lowest-inertia run is kept.
    pub restarts: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            ..Self::default()
        }
    }
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 12,
            seed: 0,
            max_iters: 100,
            tol: 1e-4,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after every assignment step of the kept run, ending with the
    /// final assignment.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn dimension(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// Number of points assigned to each cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid by squared Euclidean distance, lowest index on ties.
fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, point);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let dim = points.first().map_or(0, Vec::len);
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("clustering input"));
        }
    }
    // normalize -0.0 so it counts as the same point as 0.0
    let mut distinct: BTreeSet<Vec<u64>> = BTreeSet::new();
    for p in points {
        distinct.insert(p.iter().map(|v| (v + 0.0).to_bits()).collect());
        if distinct.len() >= k {
            return Ok(dim);
        }
    }
    Err(Error::InsufficientDistinctPoints {
        needed: k,
        found: distinct.len(),
    })
}

fn pp_init_with(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        // enough distinct points guarantees total > 0 here
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            chosen = Some(i);
            if acc > target {
                break;
            }
        }
        let c = points[chosen.expect("positive total weight")].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            let nd = squared_distance(p, &c);
            if nd < *d {
                *d = nd;
            }
        }
        centroids.push(c);
    }
    centroids
}

/// k-means++ seeding: the first centroid is drawn uniformly, each later one
/// with probability proportional to the squared distance to the nearest
/// centroid already chosen.
pub fn kmeans_pp_init(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_points(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(pp_init_with(points, k, &mut rng))
}

struct LloydRun {
    centroids: Vec<Vec<f64>>,
    assignments: Vec<usize>,
    inertia: f64,
    iterations_run: usize,
    trace: Vec<f64>,
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize], dists: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for ((p, a), d) in points.iter().zip(assignments.iter_mut()).zip(dists.iter_mut()) {
        let (j, dist) = nearest(centroids, p);
        *a = j;
        *d = dist;
        inertia += dist;
    }
    inertia
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iters: usize, tol: f64) -> LloydRun {
    let n = points.len();
    let k = centroids.len();
    let dim = centroids[0].len();
    let mut assignments = vec![0; n];
    let mut dists = vec![0.0; n];
    let mut trace = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..max_iters {
        trace.push(assign_all(points, &centroids, &mut assignments, &mut dists));

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next = Vec::with_capacity(k);
        for (j, (sum, &count)) in sums.into_iter().zip(&counts).enumerate() {
            if count > 0 {
                next.push(sum.into_iter().map(|s| s / count as f64).collect::<Vec<_>>());
            } else {
                next.push(centroids[j].clone());
            }
        }
        // empty clusters take the point farthest from its current centroid
        for j in 0..k {
            if counts[j] == 0 {
                let mut far = 0;
                for i in 1..n {
                    if dists[i] > dists[far] {
                        far = i;
                    }
                }
                next[j] = points[far].clone();
                dists[far] = 0.0;
            }
        }

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| libm::sqrt(squared_distance(a, b)))
            .fold(0.0, f64::max);
        centroids = next;
        iterations_run += 1;
        if shift < tol || shift == 0.0 {
            break;
        }
    }

    let inertia = assign_all(points, &centroids, &mut assignments, &mut dists);
    trace.push(inertia);
    LloydRun {
        centroids,
        assignments,
        inertia,
        iterations_run,
        trace,
    }
}

/// Lloyd iterations from k-means++ seeding, repeated `config.restarts`
/// times with independent seeds; the run with the lowest final inertia is
/// returned (earliest run on ties).
pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<ClusterModel> {
    check_points(points, config.k)?;
    if config.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    if !(config.tol >= 0.0) {
        return Err(Error::InvalidParameter("tol must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<LloydRun> = None;
    for _ in 0..config.restarts.max(1) {
        let init = pp_init_with(points, config.k, &mut rng);
        let run = lloyd(points, init, config.max_iters, config.tol);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    Ok(ClusterModel {
        k: config.k,
        centroids: run.centroids,
        assignments: run.assignments,
        inertia: run.inertia,
        iterations_run: run.iterations_run,
        inertia_trace: run.trace,
    })
}

/// Index of the nearest centroid, lowest index on ties.
pub fn assign(model: &ClusterModel, point: &[f64]) -> Result<usize> {
    let dim = model.dimension();
    if point.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: point.len(),
        });
    }
    Ok(nearest(&model.centroids, point).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(raw: &[(f64, f64)]) -> Vec<Vec<f64>> {
        raw.iter().map(|&(a, b)| vec![a, b]).collect()
    }

    fn model_with(centroids: Vec<Vec<f64>>) -> ClusterModel {
        ClusterModel {
            k: centroids.len(),
            centroids,
            assignments: vec![],
            inertia: 0.0,
            iterations_run: 0,
            inertia_trace: vec![],
        }
    }

    #[test]
    fn init_picks_both_points() {
        let p = pts(&[(0.0, 0.0), (10.0, 10.0)]);
        for seed in 0..20 {
            let mut c = kmeans_pp_init(&p, 2, seed).unwrap();
            c.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
            assert_eq!(c, p);
        }
    }

    #[test]
    fn init_needs_enough_distinct_points() {
        let p = pts(&[(0.0, 0.0)]);
        assert_eq!(
            kmeans_pp_init(&p, 2, 1),
            Err(Error::InsufficientDistinctPoints { needed: 2, found: 1 })
        );
        let dup = pts(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]);
        assert!(kmeans(&dup, &KMeansConfig::new(2, 0)).is_err());
        assert!(kmeans_pp_init(&p, 0, 1).is_err());
    }

    #[test]
    fn two_points_exact_fit() {
        let p = pts(&[(0.0, 0.0), (3.0, 4.0)]);
        let m = kmeans(&p, &KMeansConfig::new(2, 7)).unwrap();
        assert_eq!(m.inertia, 0.0);
        assert_ne!(m.assignments[0], m.assignments[1]);
    }

    #[test]
    fn four_point_optimum() {
        let p = pts(&[(0.0, 0.0), (0.0, 2.0), (10.0, 0.0), (10.0, 2.0)]);
        let m = kmeans(&p, &KMeansConfig::new(2, 3)).unwrap();
        assert!((m.inertia - 4.0).abs() < 1e-12);
        let mut c = m.centroids.clone();
        c.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(c, pts(&[(0.0, 1.0), (10.0, 1.0)]));
    }

    #[test]
    fn single_cluster_is_mean() {
        let p = pts(&[(1.0, 2.0), (3.0, 6.0), (5.0, 1.0)]);
        let m = kmeans(&p, &KMeansConfig::new(1, 0)).unwrap();
        assert!((m.centroids[0][0] - 3.0).abs() < 1e-12);
        assert!((m.centroids[0][1] - 3.0).abs() < 1e-12);
        assert!(m.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn assign_nearest_with_tie_break() {
        let m = model_with(pts(&[(0.0, 0.0), (10.0, 0.0)]));
        assert_eq!(assign(&m, &[1.0, 0.0]).unwrap(), 0);
        assert_eq!(assign(&m, &[5.0, 0.0]).unwrap(), 0);
        assert_eq!(assign(&m, &[10.0, 0.0]).unwrap(), 1);
        assert!(assign(&m, &[1.0]).is_err());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // both seeds sit left of every point; one cluster starts empty
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (9.0, 0.0), (10.0, 0.0)]);
        let run = lloyd(&p, pts(&[(-5.0, 0.0), (-6.0, 0.0)]), 100, 1e-9);
        let mut sizes = [0; 2];
        for &a in &run.assignments {
            sizes[a] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0));
        assert!((run.inertia - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn model_invariants(
            raw in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..40),
            k in 1usize..4,
            seed in 0u64..1000,
        ) {
            let p = pts(&raw);
            let cfg = KMeansConfig { restarts: 2, ..KMeansConfig::new(k, seed) };
            let Ok(m) = kmeans(&p, &cfg) else { return Ok(()); };
            // assignments are nearest centroids; inertia matches a recount
            let mut recount = 0.0;
            for (pt, &a) in p.iter().zip(&m.assignments) {
                prop_assert_eq!(assign(&m, pt).unwrap(), a);
                recount += squared_distance(pt, &m.centroids[a]);
            }
            prop_assert!((recount - m.inertia).abs() <= 1e-9 * recount.max(1.0));
            for w in m.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
            }
            // deterministic
            prop_assert_eq!(kmeans(&p, &cfg).unwrap(), m.clone());
            // relabeling leaves inertia unchanged
            let perm: Vec<usize> = (0..k).rev().collect();
            let relabeled: f64 = p.iter().zip(&m.assignments)
                .map(|(pt, &a)| {
                    let centroids: Vec<&Vec<f64>> = perm.iter().map(|&j| &m.centroids[j]).collect();
                    let new_label = perm.iter().position(|&j| j == a).unwrap();
                    squared_distance(pt, centroids[new_label])
                })
                .sum();
            prop_assert!((relabeled - m.inertia).abs() <= 1e-12 * m.inertia.max(1.0));
        }
    }
}
