use spherical_cluster::*;

#[test]
fn duplicate_points_solve_exactly() {
    // duplicated rows give bit-identical sink spheres; the descent must treat
    // them as one sphere with multiplicity and still certify the optimum
    let pts = vec![
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.3, 0.8],
        vec![-0.4, 0.5],
        vec![0.3, 0.8],
    ];
    for eta in [0.1, 0.4, 0.7] {
        let p = build_problem(Dataset64::new(pts.clone()).unwrap(), eta).unwrap();
        let cfg = SolverConfig::default();
        let traj = solve(&p, &cfg).unwrap();
        assert!(traj.converged, "eta = {eta}");
        assert_eq!(traj.jitters, 0, "duplicates must not need jitter");
        let cert = certify(&p, &traj.final_point, &cfg);
        assert!(cert.is_minimum, "eta = {eta}");
        let diam = p.dataset().diameter();
        let oracle = brute_force_min(&p, 1e-6 * diam).unwrap();
        assert!(
            linalg::dist(&traj.final_point, &oracle) <= 1e-5 * diam,
            "eta = {eta}: {:?} vs {:?}",
            traj.final_point,
            oracle
        );
    }
}
