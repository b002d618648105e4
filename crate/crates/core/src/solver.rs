//! The exact descent: follow the generalized-gradient semiflow through the
//! arrangement. Inside a full-dimensional cell the flow is a straight segment
//! toward the cell quadratic's center; on a sphere intersection it is a
//! great-circle arc toward the constrained minimizer; the multiplier pattern
//! of the Clarke QP decides which regime applies and when the minimum is
//! certified.

use crate::cellgeom::{
    geodesic_crossing, line_crossing, min_on_intersection_with, move_to_zero, sphere_intersection,
    GeodesicOutcome, GeomError, GeomTols,
};
use crate::clarke::{solve_clarke_qp_warm, ClarkeError, ClarkeTols};
use crate::linalg::{add_scaled, norm, normalize, sub};
use crate::model::{
    active_gradient, objective, signature, CellSignature, ModelError, ScProblem,
};
use crate::scalar::{real, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("geometry repeatedly degenerate after jitter retries")]
    NonGenericGeometry,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where to start the descent. The mean is the exact solution of the
/// zero-eta problem, so it is the default warm start.
#[derive(Debug, Clone)]
pub enum Start<T> {
    Mean,
    Point(Vec<T>),
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    /// Stationarity factor: converged when the generalized gradient norm
    /// drops below tol_grad * (1 + gradient norm at the start point).
    pub tol_grad: T,
    pub tol_sign: T,
    pub tol_lambda: T,
    /// Defaults to 10 n + 1000 when unset.
    pub max_steps: Option<usize>,
    pub start: Start<T>,
    pub jitter_scale: T,
    pub record_trace: bool,
    pub seed: u64,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            tol_grad: real(1e-8),
            tol_sign: real(1e-9),
            tol_lambda: real(1e-7),
            max_steps: None,
            start: Start::Mean,
            jitter_scale: T::one(),
            record_trace: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Teleport,
    LineDescent,
    SphereDescent,
    MinJump,
}

impl StepKind {
    pub fn label(&self) -> &'static str {
        match self {
            StepKind::Teleport => "teleport",
            StepKind::LineDescent => "line_descent",
            StepKind::SphereDescent => "sphere_descent",
            StepKind::MinJump => "min_jump",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounts {
    pub teleport: usize,
    pub line_descent: usize,
    pub sphere_descent: usize,
    pub min_jump: usize,
}

impl StepCounts {
    pub fn total(&self) -> usize {
        self.teleport + self.line_descent + self.sphere_descent + self.min_jump
    }

    fn bump(&mut self, kind: StepKind) {
        match kind {
            StepKind::Teleport => self.teleport += 1,
            StepKind::LineDescent => self.line_descent += 1,
            StepKind::SphereDescent => self.sphere_descent += 1,
            StepKind::MinJump => self.min_jump += 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Step<T> {
    pub kind: StepKind,
    pub point: Vec<T>,
    pub signature: CellSignature,
    pub f_value: T,
    pub gen_grad_norm: Option<T>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub steps: Vec<Step<T>>,
    pub final_point: Vec<T>,
    pub final_f: T,
    pub final_gen_grad_norm: T,
    pub final_signature: CellSignature,
    pub converged: bool,
    pub step_counts: StepCounts,
    pub jitters: usize,
}

/// Independent stationarity re-check at an arbitrary point.
#[derive(Debug, Clone)]
pub struct Certificate<T> {
    pub gen_grad_norm: T,
    pub is_minimum: bool,
    pub signature: CellSignature,
}

fn resolve_start<T: Real>(problem: &ScProblem<T>, start: &Start<T>) -> Vec<T> {
    match start {
        Start::Mean => problem.mean().to_vec(),
        Start::Point(p) => {
            assert_eq!(p.len(), problem.dim(), "start point dimension mismatch");
            p.clone()
        }
        Start::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let ds = problem.dataset();
            let d = ds.dim();
            let mut lo = ds.point(0).to_vec();
            let mut hi = ds.point(0).to_vec();
            for p in ds.points() {
                for j in 0..d {
                    lo[j] = lo[j].min(p[j]);
                    hi[j] = hi[j].max(p[j]);
                }
            }
            (0..d)
                .map(|j| {
                    let t: f64 = rng.random_range(0.0..1.0);
                    lo[j] + (hi[j] - lo[j]) * real::<T>(t)
                })
                .collect()
        }
    }
}

/// Absolute stationarity threshold for a (problem, config) pair; shared by
/// `solve` and `certify` so certificates are independent of solver state.
pub fn stationarity_threshold<T: Real>(problem: &ScProblem<T>, config: &SolverConfig<T>) -> T {
    let x0 = resolve_start(problem, &config.start);
    let sig0 = signature(problem, &x0, config.tol_sign);
    let g0 = active_gradient(problem, &sig0.i_plus, &x0);
    config.tol_grad * (T::one() + norm(&g0))
}

fn geom_tols<T: Real>(config: &SolverConfig<T>) -> GeomTols<T> {
    GeomTols {
        tol_on: config.tol_sign,
        ..GeomTols::default()
    }
}

fn clarke_tols<T: Real>(config: &SolverConfig<T>, threshold: T) -> ClarkeTols<T> {
    ClarkeTols {
        eps_lambda: config.tol_lambda,
        tol_grad: threshold,
        ..ClarkeTols::default()
    }
}

/// Strict containment of `point` in the open cell with the given sign split:
/// any index inside the on-sphere band counts as not contained.
fn contained_in_open_cell<T: Real>(
    problem: &ScProblem<T>,
    point: &[T],
    i_plus: &[usize],
    i_minus: &[usize],
    tol_sign: T,
) -> bool {
    let s = signature(problem, point, tol_sign);
    s.i_zero.is_empty() && s.i_plus == i_plus && s.i_minus == i_minus
}

/// Containment of an on-sphere point in the boundary cell (I+, I0, I-): the
/// I0 incidences hold by construction, the rest must match strictly.
fn contained_on_sphere<T: Real>(
    problem: &ScProblem<T>,
    point: &[T],
    i_plus: &[usize],
    i_minus: &[usize],
    tol_sign: T,
) -> bool {
    let spheres = problem.spheres();
    for &i in i_plus {
        let band = tol_sign * T::one().max(spheres.radius_sq(i));
        if !(spheres.power(i, point) > band) {
            return false;
        }
    }
    for &i in i_minus {
        let band = tol_sign * T::one().max(spheres.radius_sq(i));
        if !(spheres.power(i, point) < -band) {
            return false;
        }
    }
    true
}

struct Recorder<T> {
    steps: Vec<Step<T>>,
    counts: StepCounts,
    record: bool,
    pending_grad: bool,
}

impl<T: Real> Recorder<T> {
    fn new(record: bool) -> Self {
        Recorder {
            steps: Vec::new(),
            counts: StepCounts::default(),
            record,
            pending_grad: false,
        }
    }

    fn push(
        &mut self,
        kind: StepKind,
        point: &[T],
        sig: &CellSignature,
        f: T,
        grad: Option<T>,
    ) {
        self.counts.bump(kind);
        if self.record {
            self.pending_grad = grad.is_none();
            self.steps.push(Step {
                kind,
                point: point.to_vec(),
                signature: sig.clone(),
                f_value: f,
                gen_grad_norm: grad,
            });
        }
    }

    fn fill_grad(&mut self, g: T) {
        if self.record && self.pending_grad {
            if let Some(last) = self.steps.last_mut() {
                last.gen_grad_norm = Some(g);
            }
            self.pending_grad = false;
        }
    }
}

/// Run the exact descent to the unique minimizer.
pub fn solve<T: Real>(
    problem: &ScProblem<T>,
    config: &SolverConfig<T>,
) -> Result<Trajectory<T>, SolveError> {
    let threshold = stationarity_threshold(problem, config);
    let gtols = geom_tols(config);
    let ctols = clarke_tols(config, threshold);
    let max_steps = config.max_steps.unwrap_or(10 * problem.len() + 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut x = resolve_start(problem, &config.start);
    let mut sig = signature(problem, &x, config.tol_sign);
    let mut rec = Recorder::new(config.record_trace);
    let mut jitters = 0usize;
    let mut stall = 0usize;
    let mut last_f = T::infinity();
    let mut warm: Option<(Vec<usize>, Vec<T>)> = None;

    let jitter = |x: &mut Vec<T>,
                      sig: &mut CellSignature,
                      jitters: &mut usize,
                      rng: &mut ChaCha8Rng|
     -> Result<(), SolveError> {
        *jitters += 1;
        if *jitters > 5 {
            return Err(SolveError::NonGenericGeometry);
        }
        let mut dir: Vec<T> = (0..x.len())
            .map(|_| real::<T>(rng.random_range(-1.0..1.0)))
            .collect();
        if normalize(&mut dir) == T::zero() {
            dir[0] = T::one();
        }
        // escalate: incidence bands scale with the squared sphere radii, so a
        // fixed displacement may be too small to leave them
        let escalation = real::<T>(10.0).powi(*jitters as i32 - 1);
        let amount =
            config.jitter_scale * real::<T>(1e-9) * (T::one() + problem.extent()) * escalation;
        add_scaled(x, amount, &dir);
        *sig = signature(problem, x, config.tol_sign);
        Ok(())
    };

    let mut iter = 0usize;
    loop {
        if iter >= max_steps {
            break;
        }
        iter += 1;

        let f = objective(problem, &x);
        if f > last_f - real::<T>(1e-14) * (T::one() + f.abs()) {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall >= 3 {
            jitter(&mut x, &mut sig, &mut jitters, &mut rng)?;
            stall = 0;
            last_f = T::infinity();
            warm = None;
            continue;
        }
        last_f = f;

        if sig.is_full_dimensional() {
            let grad = active_gradient(problem, &sig.i_plus, &x);
            let gnorm = norm(&grad);
            rec.fill_grad(gnorm);
            if gnorm <= threshold {
                return Ok(finish(problem, x, sig, gnorm, true, rec, jitters));
            }
            let target = problem.spheres().centers_mean(&sig.i_plus);
            if contained_in_open_cell(problem, &target, &sig.i_plus, &sig.i_minus, config.tol_sign)
            {
                let tf = objective(problem, &target);
                let tsig = signature(problem, &target, config.tol_sign);
                rec.push(StepKind::Teleport, &target, &tsig, tf, Some(T::zero()));
                return Ok(finish(problem, target, tsig, T::zero(), true, rec, jitters));
            }
            let dir = sub(&target, &x);
            match line_crossing(problem.spheres(), &x, &dir, &sig, &gtols) {
                Some(hit) => {
                    let hf = objective(problem, &hit.point);
                    rec.push(StepKind::LineDescent, &hit.point, &hit.signature, hf, None);
                    x = hit.point;
                    sig = hit.signature;
                }
                None => {
                    // target is reachable: the segment stays in the cell
                    let tf = objective(problem, &target);
                    let tsig = signature(problem, &target, config.tol_sign);
                    rec.push(StepKind::Teleport, &target, &tsig, tf, None);
                    x = target;
                    sig = tsig;
                }
            }
            continue;
        }

        // positive codimension: Clarke QP refines the partition
        let warm_lambda = warm
            .as_ref()
            .filter(|(iz, _)| *iz == sig.i_zero)
            .map(|(_, l)| l.as_slice());
        let clarke = match solve_clarke_qp_warm(problem, &x, &sig, warm_lambda, &ctols) {
            Ok(c) => c,
            Err(ClarkeError::QpNotConverged) => {
                jitter(&mut x, &mut sig, &mut jitters, &mut rng)?;
                warm = None;
                continue;
            }
        };
        warm = Some((sig.i_zero.clone(), clarke.lambda.clone()));
        rec.fill_grad(clarke.gen_grad_norm);
        if clarke.is_minimum {
            return Ok(finish(problem, x, sig, clarke.gen_grad_norm, true, rec, jitters));
        }
        if clarke.degenerate {
            jitter(&mut x, &mut sig, &mut jitters, &mut rng)?;
            warm = None;
            continue;
        }

        if clarke.i_star_zero.is_empty() {
            // flow leaves the spheres into the full-dimensional refined cell
            let target = problem.spheres().centers_mean(&clarke.i_star_plus);
            let star_sig = CellSignature {
                i_plus: clarke.i_star_plus.clone(),
                i_zero: Vec::new(),
                i_minus: clarke.i_star_minus.clone(),
            };
            if contained_in_open_cell(
                problem,
                &target,
                &star_sig.i_plus,
                &star_sig.i_minus,
                config.tol_sign,
            ) {
                let tf = objective(problem, &target);
                let tsig = signature(problem, &target, config.tol_sign);
                rec.push(StepKind::Teleport, &target, &tsig, tf, Some(T::zero()));
                return Ok(finish(problem, target, tsig, T::zero(), true, rec, jitters));
            }
            let dir = sub(&target, &x);
            match line_crossing(problem.spheres(), &x, &dir, &star_sig, &gtols) {
                Some(hit) => {
                    let hf = objective(problem, &hit.point);
                    rec.push(StepKind::LineDescent, &hit.point, &hit.signature, hf, None);
                    x = hit.point;
                    sig = hit.signature;
                }
                None => {
                    let tf = objective(problem, &target);
                    let tsig = signature(problem, &target, config.tol_sign);
                    rec.push(StepKind::Teleport, &target, &tsig, tf, None);
                    x = target;
                    sig = tsig;
                }
            }
            continue;
        }

        // flow continues on the sphere intersection of the interior multipliers
        let outcome: Result<(), GeomError> = (|| {
            let inter = sphere_intersection(problem.spheres(), &clarke.i_star_zero, &gtols)?;
            let y = min_on_intersection_with(
                problem.spheres(),
                &inter,
                &clarke.i_star_plus,
                &gtols,
            )?;
            let star_sig = CellSignature {
                i_plus: clarke.i_star_plus.clone(),
                i_zero: clarke.i_star_zero.clone(),
                i_minus: clarke.i_star_minus.clone(),
            };
            if contained_on_sphere(
                problem,
                &y,
                &star_sig.i_plus,
                &star_sig.i_minus,
                config.tol_sign,
            ) {
                let yf = objective(problem, &y);
                rec.push(StepKind::MinJump, &y, &star_sig, yf, None);
                x = y;
                sig = star_sig;
                return Ok(());
            }
            match geodesic_crossing(problem.spheres(), &x, &y, &inter, &star_sig, &gtols)? {
                GeodesicOutcome::Crossing(cr) => {
                    let cf = objective(problem, &cr.point);
                    rec.push(StepKind::SphereDescent, &cr.point, &cr.signature, cf, None);
                    x = cr.point;
                    sig = cr.signature;
                }
                GeodesicOutcome::ReachedTarget(p) => {
                    // containment said no, crossing search said clear: band-edge
                    // disagreement; land on y and widen its zero set accordingly
                    let extra: Vec<usize> = star_sig
                        .i_plus
                        .iter()
                        .chain(star_sig.i_minus.iter())
                        .copied()
                        .filter(|&i| {
                            problem.spheres().power(i, &p).abs()
                                <= config.tol_sign * T::one().max(problem.spheres().radius_sq(i))
                        })
                        .collect();
                    let new_sig = move_to_zero(&star_sig, &extra);
                    let pf = objective(problem, &p);
                    rec.push(StepKind::MinJump, &p, &new_sig, pf, None);
                    x = p;
                    sig = new_sig;
                }
            }
            Ok(())
        })();
        if outcome.is_err() {
            jitter(&mut x, &mut sig, &mut jitters, &mut rng)?;
            warm = None;
            continue;
        }
    };

    // step cap exhausted: report what we have
    let f = objective(problem, &x);
    let grad = match solve_clarke_qp_warm(problem, &x, &sig, None, &ctols) {
        Ok(c) => c.gen_grad_norm,
        Err(_) => norm(&active_gradient(problem, &sig.i_plus, &x)),
    };
    Ok(Trajectory {
        steps: rec.steps,
        final_point: x,
        final_f: f,
        final_gen_grad_norm: grad,
        final_signature: sig,
        converged: false,
        step_counts: rec.counts,
        jitters,
    })
}

fn finish<T: Real>(
    problem: &ScProblem<T>,
    x: Vec<T>,
    sig: CellSignature,
    gnorm: T,
    converged: bool,
    rec: Recorder<T>,
    jitters: usize,
) -> Trajectory<T> {
    let f = objective(problem, &x);
    Trajectory {
        steps: rec.steps,
        final_point: x,
        final_f: f,
        final_gen_grad_norm: gnorm,
        final_signature: sig,
        converged,
        step_counts: rec.counts,
        jitters,
    }
}

/// Recompute signature and Clarke QP at `x` from scratch; no solver state.
pub fn certify<T: Real>(
    problem: &ScProblem<T>,
    x: &[T],
    config: &SolverConfig<T>,
) -> Certificate<T> {
    let threshold = stationarity_threshold(problem, config);
    let sig = signature(problem, x, config.tol_sign);
    if sig.is_full_dimensional() {
        let g = norm(&active_gradient(problem, &sig.i_plus, x));
        return Certificate {
            gen_grad_norm: g,
            is_minimum: g <= threshold,
            signature: sig,
        };
    }
    let ctols = clarke_tols(config, threshold);
    match solve_clarke_qp_warm(problem, x, &sig, None, &ctols) {
        Ok(c) => Certificate {
            gen_grad_norm: c.gen_grad_norm,
            is_minimum: c.is_minimum,
            signature: sig,
        },
        Err(_) => Certificate {
            gen_grad_norm: T::infinity(),
            is_minimum: false,
            signature: sig,
        },
    }
}

/// Restart the solver from random points near a certified minimizer and
/// report the largest observed step count. The local convergence bound is
/// 3^c where c is the number of spheres through the minimizer.
pub fn convergence_radius_check<T: Real>(
    problem: &ScProblem<T>,
    x_star: &[T],
    trials: usize,
    radius: T,
    config: &SolverConfig<T>,
) -> Result<usize, SolveError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let d = problem.dim();
    let mut worst = 0usize;
    for _ in 0..trials {
        // uniform draw in the ball of the given radius
        let mut dir: Vec<T> = (0..d)
            .map(|_| {
                let u1: f64 = rng.random_range(1e-12..1.0);
                let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                real::<T>((-2.0 * u1.ln()).sqrt() * u2.cos())
            })
            .collect();
        if normalize(&mut dir) == T::zero() {
            dir[0] = T::one();
        }
        let u: f64 = rng.random_range(0.0..1.0);
        let r = radius * real::<T>(u.powf(1.0 / d as f64));
        let mut start = x_star.to_vec();
        add_scaled(&mut start, r, &dir);
        let mut cfg = config.clone();
        cfg.start = Start::Point(start);
        cfg.record_trace = false;
        let traj = solve(problem, &cfg)?;
        worst = worst.max(traj.step_counts.total());
    }
    Ok(worst)
}
