use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::InterestMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    /// Number of clusters.
    pub k: usize,
    /// Stop once the distortion improves by less than this between iterations.
    pub theta0: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k: 5,
            theta0: 1e-6,
            max_iterations: 300,
            seed: 0,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("cluster count k must be at least 1".into()));
        }
        if !(self.theta0.is_finite() && self.theta0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "theta0 must be positive and finite, got {}",
                self.theta0
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    centroids: Vec<f64>,
    k: usize,
    dim: usize,
    distortion: f64,
    iterations_run: usize,
    trace: Vec<f64>,
}

impl ClusterAssignment {
    /// Builds an assignment from explicit labels, with centroids set to member
    /// means. Every cluster in `0..k` must be used.
    pub fn from_labels(data: &[f64], dim: usize, labels: Vec<usize>, k: usize) -> Result<Self> {
        check_shape(data, dim)?;
        if labels.len() * dim != data.len() && dim > 0 {
            return Err(Error::InvalidInput("one label per row required".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!("label {bad} out of range for k={k}")));
        }
        let mut centroids = vec![0.0; k * dim];
        let sizes = update_centroids(data, dim, &labels, &mut centroids);
        if sizes.contains(&0) {
            return Err(Error::InvalidInput("every cluster needs at least one member".into()));
        }
        let distortion = distortion(data, dim, &labels, &centroids);
        Ok(ClusterAssignment {
            labels,
            centroids,
            k,
            dim,
            distortion,
            iterations_run: 0,
            trace: vec![distortion],
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, user: usize) -> usize {
        self.labels[user]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, cluster: usize) -> &[f64] {
        &self.centroids[cluster * self.dim..][..self.dim]
    }

    /// Row-major `k * dim` centroid matrix.
    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    /// Final total squared distance of rows to their centroids.
    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Distortion after the initial assignment, then after every iteration.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Members of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i as u32);
        }
        members
    }
}

fn check_shape(data: &[f64], dim: usize) -> Result<()> {
    if dim == 0 {
        if !data.is_empty() {
            return Err(Error::InvalidInput("zero-dimensional rows must be empty".into()));
        }
    } else if !data.len().is_multiple_of(dim) {
        return Err(Error::InvalidInput(format!(
            "{} values do not form rows of width {dim}",
            data.len()
        )));
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[f64], dim: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (p, c) in centroids.chunks(dim.max(1)).enumerate() {
        let d = sq_dist(row, c);
        if d < best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

/// Nearest-centroid labels; ties go to the lowest cluster index.
fn assign(data: &[f64], dim: usize, centroids: &[f64], n: usize, labels: &mut [usize]) {
    let row = |i: usize| &data[i * dim..][..dim];
    #[cfg(feature = "parallel")]
    labels
        .par_iter_mut()
        .enumerate()
        .with_min_len(256)
        .for_each(|(i, l)| *l = nearest(row(i), centroids, dim));
    #[cfg(not(feature = "parallel"))]
    labels
        .iter_mut()
        .enumerate()
        .for_each(|(i, l)| *l = nearest(row(i), centroids, dim));
    debug_assert_eq!(labels.len(), n);
}

/// Gives every empty cluster the row farthest from its own centroid, taken
/// from a cluster that keeps at least one member.
fn repair_empty(data: &[f64], dim: usize, labels: &mut [usize], centroids: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for p in 0..k {
        if sizes[p] > 0 {
            continue;
        }
        let mut pick = None;
        let mut pick_d = f64::NEG_INFINITY;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = sq_dist(&data[i * dim..][..dim], &centroids[l * dim..][..dim]);
            if d > pick_d {
                pick_d = d;
                pick = Some(i);
            }
        }
        let i = pick.expect("k <= n guarantees a cluster with two members");
        sizes[labels[i]] -= 1;
        sizes[p] = 1;
        labels[i] = p;
        centroids[p * dim..][..dim].copy_from_slice(&data[i * dim..][..dim]);
    }
}

/// Sets each centroid to the mean of its members; returns cluster sizes.
/// Centroids of empty clusters are left untouched.
fn update_centroids(data: &[f64], dim: usize, labels: &[usize], centroids: &mut [f64]) -> Vec<usize> {
    let k = centroids.len() / dim.max(1);
    let mut sums = vec![0.0; centroids.len()];
    let mut sizes = vec![0usize; k.max(labels.iter().map(|l| l + 1).max().unwrap_or(0))];
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        for (s, x) in sums[l * dim..][..dim].iter_mut().zip(&data[i * dim..][..dim]) {
            *s += x;
        }
    }
    for p in 0..k {
        if sizes[p] == 0 {
            continue;
        }
        let inv = sizes[p] as f64;
        for (c, s) in centroids[p * dim..][..dim].iter_mut().zip(&sums[p * dim..][..dim]) {
            *c = s / inv;
        }
    }
    sizes
}

pub(crate) fn distortion(data: &[f64], dim: usize, labels: &[usize], centroids: &[f64]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(&data[i * dim..][..dim], &centroids[l * dim..][..dim]))
        .sum()
}

/// K-means on the normalized interest rows.
pub fn kmeans(interest: &InterestMatrix, config: &ClusteringConfig) -> Result<ClusterAssignment> {
    kmeans_rows(interest.normalized(), interest.n_tags(), interest.n_users(), config)
}

/// K-means over `n` row-major points of width `dim`.
///
/// Centroids start at `k` distinct random rows. Each iteration assigns every
/// row to its nearest centroid, repairs empty clusters, and moves centroids to
/// member means. Iteration stops when the distortion improves by less than
/// `theta0` or after `max_iterations`.
pub fn kmeans_rows(data: &[f64], dim: usize, n: usize, config: &ClusteringConfig) -> Result<ClusterAssignment> {
    config.validate()?;
    check_shape(data, dim)?;
    if dim > 0 && data.len() / dim != n {
        return Err(Error::InvalidInput(format!(
            "expected {n} rows of width {dim}, got {} values",
            data.len()
        )));
    }
    if n == 0 {
        return Err(Error::Empty("clustering input"));
    }
    let k = config.k;
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "cannot form {k} clusters from {n} users"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = vec![0.0; k * dim];
    for (p, i) in index::sample(&mut rng, n, k).into_iter().enumerate() {
        centroids[p * dim..][..dim].copy_from_slice(&data[i * dim..][..dim]);
    }

    let mut labels = vec![0usize; n];
    assign(data, dim, &centroids, n, &mut labels);
    repair_empty(data, dim, &mut labels, &mut centroids, k);
    let mut current = distortion(data, dim, &labels, &centroids);
    let mut trace = vec![current];
    let mut iterations_run = 0;

    while iterations_run < config.max_iterations {
        iterations_run += 1;
        assign(data, dim, &centroids, n, &mut labels);
        repair_empty(data, dim, &mut labels, &mut centroids, k);
        update_centroids(data, dim, &labels, &mut centroids);
        let next = distortion(data, dim, &labels, &centroids);
        trace.push(next);
        let improvement = current - next;
        current = next;
        if improvement < config.theta0 {
            break;
        }
    }

    Ok(ClusterAssignment {
        labels,
        centroids,
        k,
        dim,
        distortion: current,
        iterations_run,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, seed: u64) -> ClusteringConfig {
        ClusteringConfig {
            k,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = [0.0, 0.0, 2.0, 0.0, 1.0, 3.0];
        let a = kmeans_rows(&data, 2, 3, &cfg(1, 9)).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0]);
        assert!((a.centroid(0)[0] - 1.0).abs() < 1e-15);
        assert!((a.centroid(0)[1] - 1.0).abs() < 1e-15);
        // (1+1) + (1+1) + (0+4)
        assert!((a.distortion() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn separable_pairs() {
        let data = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        for seed in 0..20 {
            let a = kmeans_rows(&data, 2, 4, &cfg(2, seed)).unwrap();
            assert_eq!(a.distortion(), 0.0);
            assert_eq!(a.label(0), a.label(1));
            assert_eq!(a.label(2), a.label(3));
            assert_ne!(a.label(0), a.label(2));
        }
    }

    #[test]
    fn k_equal_n_isolates_every_point() {
        let data = [0.1, 0.9, 0.5, 0.5, 0.9, 0.1, 0.0, 0.0];
        let a = kmeans_rows(&data, 2, 4, &cfg(4, 3)).unwrap();
        assert_eq!(a.distortion(), 0.0);
        assert_eq!(a.cluster_sizes(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn duplicate_rows_still_fill_every_cluster() {
        // all rows identical: random init picks equal centroids, repair must fire
        let data = [0.5; 12];
        let a = kmeans_rows(&data, 2, 6, &cfg(3, 1)).unwrap();
        assert!(a.cluster_sizes().iter().all(|&s| s >= 1));
        assert_eq!(a.distortion(), 0.0);
    }

    #[test]
    fn rejects_bad_k() {
        let data = [0.0, 1.0];
        assert!(kmeans_rows(&data, 1, 2, &cfg(3, 0)).is_err());
        assert!(kmeans_rows(&data, 1, 2, &cfg(0, 0)).is_err());
        let bad_theta = ClusteringConfig {
            theta0: 0.0,
            ..cfg(1, 0)
        };
        assert!(kmeans_rows(&data, 1, 2, &bad_theta).is_err());
    }

    #[test]
    fn trace_ends_at_reported_distortion() {
        let data: Vec<f64> = (0..40).map(|x| ((x * 37) % 11) as f64 / 11.0).collect();
        let a = kmeans_rows(&data, 2, 20, &cfg(3, 4)).unwrap();
        assert_eq!(*a.trace().last().unwrap(), a.distortion());
        assert_eq!(a.trace().len(), a.iterations_run() + 1);
        let recomputed = distortion(&data, 2, a.labels(), a.centroids());
        assert_eq!(recomputed, a.distortion());
    }

    #[test]
    fn from_labels_requires_every_cluster() {
        let data = [0.0, 1.0, 2.0];
        assert!(ClusterAssignment::from_labels(&data, 1, vec![0, 0, 0], 2).is_err());
        let a = ClusterAssignment::from_labels(&data, 1, vec![0, 1, 1], 2).unwrap();
        assert_eq!(a.centroid(1), &[1.5]);
        assert_eq!(a.members(), vec![vec![0], vec![1, 2]]);
    }
}
