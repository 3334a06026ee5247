//! Lloyd's k-means with k-means++ style seeding.
//!
//! Deterministic for a fixed (points, k, seed) triple: seeding draws from
//! per-restart streams of the caller's seed, assignment ties break to the
//! lowest centroid index, and an emptied cluster keeps its previous
//! centroid (which also keeps the within-cluster SSE non-increasing across
//! iterations). The best of [`KMEANS_RESTARTS`] seedings by final SSE wins,
//! earlier restarts preferred on ties.

use super::DiscretizeError;
use crate::rng::Rng;

pub const KMEANS_MAX_ITERS: usize = 100;

pub const KMEANS_RESTARTS: usize = 8;

#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    /// Total within-cluster sum of squared distances at convergence.
    pub sse: f64,
}

/// Cluster centroids with semantic labels attached.
#[derive(Debug, Clone)]
pub struct ClusterModel<L> {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<L>,
}

impl<L: Copy> ClusterModel<L> {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn classify(&self, point: &[f64]) -> L {
        self.labels[nearest_centroid(&self.centroids, point)]
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the centroid nearest to `point`; ties break to the lowest index.
pub fn nearest_centroid(centroids: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(c, point);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(points.len())].clone());
    while centroids.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| centroids.iter().map(|c| dist2(c, p)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.next_f64() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All points coincide with a centroid; the distinct-point
            // precondition makes this unreachable, but stay deterministic.
            rng.gen_range(points.len())
        };
        centroids.push(points[next].clone());
    }
    centroids
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KmeansFit, DiscretizeError> {
    if k == 0 {
        return Err(DiscretizeError::Clustering("k must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(DiscretizeError::Clustering("no points to cluster".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(DiscretizeError::Clustering("points have mixed dimensions".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(DiscretizeError::Clustering("points must be finite".into()));
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| dist2(q, p) == 0.0) {
            distinct.push(p);
            if distinct.len() >= k {
                break;
            }
        }
    }
    if distinct.len() < k {
        return Err(DiscretizeError::Clustering(format!(
            "need at least {k} distinct points, found {}",
            distinct.len()
        )));
    }

    let mut best: Option<KmeansFit> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = Rng::stream(seed, restart as u64);
        let fit = lloyd(points, k, dim, &mut rng);
        match &best {
            Some(b) if b.sse <= fit.sse => {}
            _ => best = Some(fit),
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(points: &[Vec<f64>], k: usize, dim: usize, rng: &mut Rng) -> KmeansFit {
    let mut centroids = seed_centroids(points, k, rng);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut iterations = 0;
    for iter in 1..=KMEANS_MAX_ITERS {
        iterations = iter;
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let a = nearest_centroid(&centroids, p);
            if a != assignments[i] {
                assignments[i] = a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (c, (sum, count)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            if *count > 0 {
                *c = sum.iter().map(|s| s / *count as f64).collect();
            }
        }
    }
    let sse = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| dist2(p, &centroids[a]))
        .sum();
    KmeansFit { centroids, assignments, iterations, sse }
}
