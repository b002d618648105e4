//! Per-eta statistics of a solved instance: model radius, inlier/outlier
//! splits against both the solved center and the center of mass, step-type
//! counts, and the two-component principal projection used for plotting.

use crate::linalg::{dist_sq, dot, symmetric_eigen};
use crate::model::{distance_variance, objective, Dataset, ScProblem};
use crate::scalar::Real;
use crate::solver::{StepCounts, Trajectory};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("trajectory did not converge; statistics need a certified center")]
    NotConverged,
    #[error("data has zero variance in every direction")]
    RankDeficient,
    #[error("principal projection needs d >= 2")]
    DimensionTooLow,
}

#[derive(Debug, Clone)]
pub struct EtaReport<T> {
    pub eta: T,
    pub center: Vec<T>,
    pub f_value: T,
    /// eta times the unbiased distance variance at the solved center.
    pub sc_radius_sq: T,
    pub n_out_sc: usize,
    pub n_out_com: usize,
    pub mean_cost_sc: Option<T>,
    pub mean_cost_com: Option<T>,
    pub outlier_ratio: Option<T>,
    pub step_counts: StepCounts,
    pub gen_grad_norm: T,
    pub timings: Vec<(String, Duration)>,
}

pub fn eta_report<T: Real>(
    problem: &ScProblem<T>,
    trajectory: &Trajectory<T>,
    timings: Vec<(String, Duration)>,
) -> Result<EtaReport<T>, StatsError> {
    if !trajectory.converged {
        return Err(StatsError::NotConverged);
    }
    let center = &trajectory.final_point;
    let f_value = objective(problem, center);
    let radius_sq = problem.eta() * distance_variance(problem.dataset(), center);
    let mean = problem.mean();
    let mut n_out_sc = 0usize;
    let mut n_out_com = 0usize;
    for p in problem.dataset().points() {
        if dist_sq(p, center) > radius_sq {
            n_out_sc += 1;
        }
        if dist_sq(p, mean) > radius_sq {
            n_out_com += 1;
        }
    }
    let mean_cost_sc =
        (n_out_sc > 0).then(|| f_value / T::from_usize(n_out_sc).unwrap());
    let mean_cost_com =
        (n_out_com > 0).then(|| f_value / T::from_usize(n_out_com).unwrap());
    let outlier_ratio = (n_out_sc > 0)
        .then(|| T::from_usize(n_out_com).unwrap() / T::from_usize(n_out_sc).unwrap());
    Ok(EtaReport {
        eta: problem.eta(),
        center: center.clone(),
        f_value,
        sc_radius_sq: radius_sq,
        n_out_sc,
        n_out_com,
        mean_cost_sc,
        mean_cost_com,
        outlier_ratio,
        step_counts: trajectory.step_counts,
        gen_grad_norm: trajectory.final_gen_grad_norm,
        timings,
    })
}

/// One data point projected onto the top-2 principal directions.
#[derive(Debug, Clone)]
pub struct ProjectedPoint<T> {
    pub coords: [T; 2],
    pub is_outlier: bool,
}

#[derive(Debug, Clone)]
pub struct ProjectionTable<T> {
    /// Orthonormal principal directions, sign-normalized so the entry of
    /// largest magnitude is positive.
    pub directions: [Vec<T>; 2],
    pub variances: [T; 2],
    pub points: Vec<ProjectedPoint<T>>,
    pub centers: Vec<(String, [T; 2])>,
}

/// Project the data and the labeled centers onto the top-2 principal
/// directions of the mean-centered data; flag each point as outlier when its
/// sub-function at the solved center is positive.
pub fn principal_projection<T: Real>(
    dataset: &Dataset<T>,
    centers: &[(String, Vec<T>)],
    problem: &ScProblem<T>,
    center: &[T],
) -> Result<ProjectionTable<T>, StatsError> {
    let d = dataset.dim();
    if d < 2 {
        return Err(StatsError::DimensionTooLow);
    }
    let n = dataset.len();
    let mean = dataset.mean();
    let mut cov = vec![T::zero(); d * d];
    for p in dataset.points() {
        for i in 0..d {
            let di = p[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += di * (p[j] - mean[j]);
            }
        }
    }
    let denom = T::from_usize(n - 1).unwrap();
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let total_var = (0..d).fold(T::zero(), |acc, i| acc + cov[i * d + i]);
    if !(total_var > T::zero()) {
        return Err(StatsError::RankDeficient);
    }
    let (vals, vecs) = symmetric_eigen(&cov, d);
    let mut dir0 = vecs[0..d].to_vec();
    let mut dir1 = vecs[d..2 * d].to_vec();
    sign_normalize(&mut dir0);
    sign_normalize(&mut dir1);

    let project = |p: &[T]| -> [T; 2] {
        let c: Vec<T> = p.iter().zip(&mean).map(|(&a, &b)| a - b).collect();
        [dot(&c, &dir0), dot(&c, &dir1)]
    };
    // same outlier predicate as eta_report: outside the model sphere
    let radius_sq = problem.eta() * distance_variance(problem.dataset(), center);
    let points = dataset
        .points()
        .map(|p| ProjectedPoint {
            coords: project(p),
            is_outlier: dist_sq(p, center) > radius_sq,
        })
        .collect();
    let centers = centers
        .iter()
        .map(|(label, c)| (label.clone(), project(c)))
        .collect();
    Ok(ProjectionTable {
        directions: [dir0, dir1],
        variances: [vals[0], vals[1].max(T::zero())],
        points,
        centers,
    })
}

fn sign_normalize<T: Real>(v: &mut [T]) {
    let mut imax = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[imax].abs() {
            imax = i;
        }
    }
    if v[imax] < T::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
