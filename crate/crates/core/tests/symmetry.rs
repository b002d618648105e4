//! Highly symmetric data violates the generic-position assumptions in every
//! way at once: mirror-symmetric sphere pairs give linearly dependent
//! gradients, and whole rings of points sit exactly on spheres through the
//! center. The solver must still certify the optimum.

use spherical_cluster::*;

fn lattice(nx: usize, ny: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            pts.push(vec![i as f64, j as f64]);
        }
    }
    pts
}

#[test]
fn lattice_center_certifies_from_the_mean() {
    for (nx, ny) in [(5, 5), (4, 6), (3, 3), (7, 2)] {
        let pts = lattice(nx, ny);
        let n = pts.len();
        for eta_f in [0.1, 0.48, 0.9] {
            let eta = eta_f * (1.0 - 1.0 / n as f64);
            let p = build_problem(Dataset64::new(pts.clone()).unwrap(), eta).unwrap();
            let cfg = SolverConfig::default();
            let traj = solve(&p, &cfg).unwrap();
            assert!(traj.converged, "{nx}x{ny} eta={eta}");
            let cert = certify(&p, &traj.final_point, &cfg);
            assert!(cert.is_minimum, "{nx}x{ny} eta={eta}");
            let oracle = brute_force_min(&p, 1e-6 * p.dataset().diameter()).unwrap();
            assert!(
                linalg::dist(&oracle, &traj.final_point) <= 1e-5 * p.dataset().diameter(),
                "{nx}x{ny} eta={eta}"
            );
        }
    }
}

#[test]
fn lattice_solves_from_random_starts() {
    let pts = lattice(5, 5);
    let n = pts.len();
    for eta_f in [0.1, 0.48, 0.7, 0.96] {
        let eta = eta_f * (1.0 - 1.0 / n as f64);
        let p = build_problem(Dataset64::new(pts.clone()).unwrap(), eta).unwrap();
        for seed in 0..10u64 {
            let cfg = SolverConfig {
                start: Start::Random(seed),
                ..SolverConfig::default()
            };
            let traj = solve(&p, &cfg).unwrap();
            assert!(traj.converged, "eta={eta} seed={seed}");
            let cert = certify(&p, &traj.final_point, &cfg);
            assert!(cert.is_minimum, "eta={eta} seed={seed}");
        }
    }
}

#[test]
fn ring_data_keeps_the_center_at_the_origin() {
    let mut pts = Vec::new();
    for ring in 1..=3 {
        for k in 0..8 {
            let a = k as f64 * std::f64::consts::TAU / 8.0;
            pts.push(vec![ring as f64 * a.cos(), ring as f64 * a.sin()]);
        }
    }
    for eta_f in [0.3, 0.7, 0.95] {
        let eta = eta_f * (1.0 - 1.0 / 24.0);
        let p = build_problem(Dataset64::new(pts.clone()).unwrap(), eta).unwrap();
        let traj = solve(&p, &SolverConfig::default()).unwrap();
        assert!(traj.converged);
        assert!(linalg::norm(&traj.final_point) < 1e-12);
    }
}
