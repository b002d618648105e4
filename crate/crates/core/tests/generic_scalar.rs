//! The kernel is generic over the scalar type: a full solve at f32 with
//! loosened tolerances, and a cross-width consistency check against f64.

use spherical_cluster::*;

#[test]
fn f32_solve_matches_f64_coarsely() {
    let pts64 = vec![
        vec![0.0f64, 0.2],
        vec![1.0, -0.1],
        vec![0.4, 0.9],
        vec![-0.6, 0.3],
        vec![0.2, -0.8],
    ];
    let pts32: Vec<Vec<f32>> = pts64
        .iter()
        .map(|p| p.iter().map(|&v| v as f32).collect())
        .collect();

    let p64 = build_problem(Dataset64::new(pts64).unwrap(), 0.5).unwrap();
    let t64 = solve(&p64, &SolverConfig64::default()).unwrap();
    assert!(t64.converged);

    let p32 = build_problem(Dataset32::new(pts32).unwrap(), 0.5f32).unwrap();
    let cfg32 = SolverConfig32 {
        tol_grad: 1e-4,
        tol_sign: 1e-5,
        tol_lambda: 1e-4,
        ..SolverConfig32::default()
    };
    let t32 = solve(&p32, &cfg32).unwrap();
    assert!(t32.converged);

    for j in 0..2 {
        let diff = (t32.final_point[j] as f64 - t64.final_point[j]).abs();
        assert!(diff < 1e-3, "coordinate {j} differs by {diff}");
    }
    let f32_as_64 = t32.final_f as f64;
    assert!((f32_as_64 - t64.final_f).abs() <= 1e-3 * (1.0 + t64.final_f));
}
