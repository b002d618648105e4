//! Comparison centers: the center of mass and the projection median, plus a
//! report of pairwise distances between labeled centers.

use crate::linalg::{dist, dot, normalize};
use crate::model::Dataset;
use crate::scalar::{real, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn center_of_mass<T: Real>(dataset: &Dataset<T>) -> Vec<T> {
    dataset.mean()
}

pub fn default_num_directions(dim: usize) -> usize {
    1000.max(50 * dim)
}

/// Robust center from random one-dimensional views: project the data onto
/// seeded uniform directions, find each projection's univariate median, and
/// average the responsible data points by their accumulated weights. Even
/// counts split the weight between the two middle points.
pub fn projection_median<T: Real>(dataset: &Dataset<T>, num_directions: usize, seed: u64) -> Vec<T> {
    assert!(num_directions >= 1);
    let n = dataset.len();
    let d = dataset.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = vec![T::zero(); n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut proj = vec![T::zero(); n];
    for _ in 0..num_directions {
        let theta = random_unit_vector::<T>(d, &mut rng);
        for (i, p) in dataset.points().enumerate() {
            proj[i] = dot(p, &theta);
        }
        order.sort_by(|&a, &b| {
            proj[a]
                .partial_cmp(&proj[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        if n % 2 == 1 {
            weights[order[n / 2]] += T::one();
        } else {
            let half = real::<T>(0.5);
            weights[order[n / 2 - 1]] += half;
            weights[order[n / 2]] += half;
        }
    }
    let total: T = weights.iter().copied().sum();
    let mut out = vec![T::zero(); d];
    for (i, p) in dataset.points().enumerate() {
        let w = weights[i] / total;
        for (oj, &pj) in out.iter_mut().zip(p) {
            *oj += w * pj;
        }
    }
    out
}

/// Gaussian sampling by Box-Muller, then normalize: uniform on the sphere.
fn random_unit_vector<T: Real>(d: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    loop {
        let mut v: Vec<T> = (0..d)
            .map(|_| {
                let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                real::<T>((-2.0 * u1.ln()).sqrt() * u2.cos())
            })
            .collect();
        if normalize(&mut v) > T::zero() {
            return v;
        }
    }
}

/// All computed centers with their pairwise distances.
#[derive(Debug, Clone)]
pub struct CenterReport<T> {
    pub mean: Vec<T>,
    pub sc_centers: Vec<(T, Vec<T>)>,
    pub projection_median: Vec<T>,
    /// Symmetric list of (label a, label b, distance), a < b lexicographically.
    pub pairwise_distances: Vec<(String, String, T)>,
}

pub fn center_report<T: Real>(
    dataset: &Dataset<T>,
    sc_centers: Vec<(T, Vec<T>)>,
    num_directions: usize,
    seed: u64,
) -> CenterReport<T> {
    let mean = center_of_mass(dataset);
    let pm = projection_median(dataset, num_directions, seed);
    let mut labeled: Vec<(String, &[T])> = vec![
        ("mean".to_string(), mean.as_slice()),
        ("projection_median".to_string(), pm.as_slice()),
    ];
    for (eta, c) in &sc_centers {
        labeled.push((format!("sc_eta={eta}"), c.as_slice()));
    }
    let mut pairwise = Vec::new();
    for i in 0..labeled.len() {
        for j in i + 1..labeled.len() {
            pairwise.push((
                labeled[i].0.clone(),
                labeled[j].0.clone(),
                dist(labeled[i].1, labeled[j].1),
            ));
        }
    }
    CenterReport {
        mean,
        sc_centers,
        projection_median: pm,
        pairwise_distances: pairwise,
    }
}
