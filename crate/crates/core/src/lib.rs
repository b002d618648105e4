//! Spherical-cluster centers for finite point sets.
//!
//! A cluster is modeled by a sphere whose squared radius is a fraction `eta`
//! of the distance variance to the center; the cost is the total power
//! distance of the points outside the sphere. The cost is strictly convex and
//! piecewise quadratic, and its unique minimizer is found exactly by
//! descending through the cell complex induced by the arrangement of sink
//! spheres. The crate also ships reference solvers, geometric medians and the
//! statistics used to analyze solved instances.
//!
//! The numeric kernel is generic over the scalar type (see [`scalar::Real`]);
//! the aliases below fix f64, which is what the command-line tools use.
//!
//! ```
//! use spherical_cluster::*;
//!
//! let data = Dataset64::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
//! let problem = build_problem(data, 0.4).unwrap();
//! let trajectory = solve(&problem, &SolverConfig64::default()).unwrap();
//! assert!(trajectory.converged);
//! assert!((trajectory.final_f - 0.1).abs() < 1e-12);
//! let cert = certify(&problem, &trajectory.final_point, &SolverConfig64::default());
//! assert!(cert.is_minimum);
//! ```

// negated comparisons are NaN guards: the failure branch must be taken
// when a computation produced NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cellgeom;
pub mod clarke;
pub mod linalg;
pub mod medians;
pub mod model;
pub mod scalar;
pub mod solver;
pub mod stats;

pub use scalar::{real, Real};

pub use model::{
    build_problem, cell_gradient, distance_variance, f_sub, f_sub_direct, objective, signature,
    CellSignature, Dataset, ModelError, ScProblem, SphereFamily,
};

pub use cellgeom::{
    geodesic_crossing, line_crossing, min_on_intersection, sphere_intersection, GeodesicCrossing,
    GeodesicOutcome, GeomError, GeomTols, IntersectionSphere, LineCrossing,
};

pub use clarke::{solve_clarke_qp, solve_clarke_qp_warm, ClarkeError, ClarkeSolution, ClarkeTols};

pub use solver::{
    certify, convergence_radius_check, solve, Certificate, SolveError, SolverConfig, Start, Step,
    StepCounts, StepKind, Trajectory,
};

pub use baselines::{
    brute_force_min, quasi_newton_min, subgradient_min, BaselineError, BaselineMethod,
    BaselineResult,
};

pub use medians::{center_of_mass, center_report, projection_median, CenterReport};

pub use stats::{eta_report, principal_projection, EtaReport, ProjectionTable, StatsError};

/// f64 instantiations, the precision the CLI works at.
pub type Dataset64 = Dataset<f64>;
pub type ScProblem64 = ScProblem<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EtaReport64 = EtaReport<f64>;
pub type CenterReport64 = CenterReport<f64>;

/// f32 instantiations for callers trading precision for footprint; the
/// default tolerances are tuned for f64 and need loosening at this width.
pub type Dataset32 = Dataset<f32>;
pub type ScProblem32 = ScProblem<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type Trajectory32 = Trajectory<f32>;
