//! Larger instances: the descent must stay certified and fast well beyond
//! the sizes the unit tests use, including eta close to its upper bound
//! where many spheres meet at the optimum.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use spherical_cluster::*;
use std::time::Instant;

fn solve_and_certify(n: usize, d: usize, eta_frac: f64, seed: u64) -> usize {
    let mut rng = StdRng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let eta = eta_frac * (1.0 - 1.0 / n as f64);
    let problem = build_problem(Dataset64::new(pts).unwrap(), eta).unwrap();
    let cfg = SolverConfig::default();
    let traj = solve(&problem, &cfg).unwrap();
    assert!(traj.converged, "n={n} d={d} eta={eta}");
    let cert = certify(&problem, &traj.final_point, &cfg);
    assert!(cert.is_minimum, "n={n} d={d} eta={eta}");
    assert_eq!(traj.jitters, 0, "generic data should never need jitter");
    traj.step_counts.total()
}

#[test]
fn larger_instances_stay_certified() {
    let timer = Instant::now();
    for (n, d, f, s) in [
        (200usize, 10usize, 0.7f64, 1u64),
        (200, 10, 0.95, 2),
        (1000, 5, 0.9, 4),
        (100, 50, 0.9, 6),
        (5000, 3, 0.5, 7),
        (500, 20, 0.8, 10),
    ] {
        let steps = solve_and_certify(n, d, f, s);
        // far below the worst-case cell count of the arrangement
        assert!(steps <= 10 * n + 1000);
    }
    assert!(timer.elapsed().as_secs() < 30);
}

#[test]
fn eta_near_the_bound_still_solves() {
    for seed in 0..5u64 {
        solve_and_certify(20, 2, 0.999, 100 + seed);
        solve_and_certify(50, 3, 0.99, 200 + seed);
    }
}
