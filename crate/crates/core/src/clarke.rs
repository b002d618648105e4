//! Generalized gradient at a point of the arrangement. On a cell of positive
//! codimension the subgradient set is a parallelepiped spanned by the active
//! sphere gradients; its least-norm element solves a box-constrained
//! least-squares program whose multipliers also refine the index partition
//! that steers the descent.

use crate::linalg::{add_scaled, dot, lu_solve, norm};
use crate::model::{active_gradient, CellSignature, ScProblem};
use crate::scalar::{real, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClarkeError {
    #[error("box QP did not converge within the iteration cap")]
    QpNotConverged,
}

#[derive(Debug, Clone)]
pub struct ClarkeTols<T> {
    /// Band for classifying a multiplier as 0, interior, or 1.
    pub eps_lambda: T,
    /// Absolute stationarity threshold on the generalized gradient norm.
    pub tol_grad: T,
    pub max_iters: usize,
}

impl<T: Real> Default for ClarkeTols<T> {
    fn default() -> Self {
        ClarkeTols {
            eps_lambda: real(1e-7),
            tol_grad: real(1e-8),
            max_iters: 500,
        }
    }
}

/// Multipliers, generalized gradient and the refined index partition at a point.
#[derive(Debug, Clone)]
pub struct ClarkeSolution<T> {
    pub lambda: Vec<T>,
    pub gen_gradient: Vec<T>,
    pub gen_grad_norm: T,
    pub i_star_plus: Vec<usize>,
    pub i_star_zero: Vec<usize>,
    pub i_star_minus: Vec<usize>,
    pub is_minimum: bool,
    /// Strict complementarity failed: some bound multiplier has an orthogonal
    /// gradient. The descent characterization does not apply; callers jitter.
    pub degenerate: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Lower,
    Free,
    Upper,
}

/// Minimize ||g + sum_i lambda_i a_i||^2 over the unit box by a primal
/// active-set method. Bound variables are held at exactly 0 or 1; free
/// variables solve the reduced normal equations. The objective is solved in
/// a 1/max(1, ||g||) rescaled form, which leaves the minimizer unchanged.
pub fn box_least_squares<T: Real>(
    g: &[T],
    columns: &[Vec<T>],
    warm: Option<&[T]>,
    max_iters: usize,
) -> Result<Vec<T>, ClarkeError> {
    let upper = vec![T::one(); columns.len()];
    box_least_squares_bounded(g, columns, &upper, warm, max_iters)
}

/// Variant with per-variable upper bounds: merged duplicate columns carry
/// their multiplicity as the bound.
///
/// Linearly dependent columns (mirror-symmetric data) make the reduced
/// systems singular even though the projected gradient stays unique; a tiny
/// ridge retry recovers one of the optimal multiplier vectors.
pub fn box_least_squares_bounded<T: Real>(
    g: &[T],
    columns: &[Vec<T>],
    upper: &[T],
    warm: Option<&[T]>,
    max_iters: usize,
) -> Result<Vec<T>, ClarkeError> {
    match active_set_solve(g, columns, upper, warm, max_iters, T::zero()) {
        Ok(l) => Ok(l),
        Err(ClarkeError::QpNotConverged) => {
            active_set_solve(g, columns, upper, warm, max_iters, real(1e-10))
        }
    }
}

fn active_set_solve<T: Real>(
    g: &[T],
    columns: &[Vec<T>],
    upper: &[T],
    warm: Option<&[T]>,
    max_iters: usize,
    ridge: T,
) -> Result<Vec<T>, ClarkeError> {
    let k = columns.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    debug_assert_eq!(upper.len(), k);
    let inv_scale = T::one() / T::one().max(norm(g));
    // Normal-equation data on the rescaled problem: Q = A^T A, c = A^T g.
    let mut q = vec![T::zero(); k * k];
    let mut c = vec![T::zero(); k];
    for i in 0..k {
        for j in i..k {
            let v = dot(&columns[i], &columns[j]) * inv_scale * inv_scale;
            q[i * k + j] = v;
            q[j * k + i] = v;
        }
        c[i] = dot(&columns[i], g) * inv_scale * inv_scale;
    }
    let mag = q.iter().chain(c.iter()).fold(T::zero(), |m, &v| m.max(v.abs()));
    for i in 0..k {
        q[i * k + i] += ridge * (T::one() + mag);
    }
    let kkt_tol = real::<T>(1e-13) * (T::one() + mag) + ridge * (T::one() + mag);

    let mut lambda = vec![T::zero(); k];
    let mut state = vec![VarState::Free; k];
    if let Some(w) = warm {
        debug_assert_eq!(w.len(), k);
        for i in 0..k {
            let wi = w[i].max(T::zero()).min(upper[i]);
            lambda[i] = wi;
            state[i] = if wi <= real(1e-12) {
                lambda[i] = T::zero();
                VarState::Lower
            } else if wi >= upper[i] - real::<T>(1e-12) {
                lambda[i] = upper[i];
                VarState::Upper
            } else {
                VarState::Free
            };
        }
    }

    for _ in 0..max_iters {
        let free: Vec<usize> = (0..k).filter(|&i| state[i] == VarState::Free).collect();
        if !free.is_empty() {
            // Solve Q_FF d = -(c_F + Q_FU u_U) for the free block.
            let f = free.len();
            let mut qff = vec![T::zero(); f * f];
            let mut rhs = vec![T::zero(); f];
            for (r, &i) in free.iter().enumerate() {
                let mut s = c[i];
                for j in 0..k {
                    if state[j] == VarState::Upper {
                        s += q[i * k + j] * upper[j];
                    }
                }
                rhs[r] = -s;
                for (cc, &j) in free.iter().enumerate() {
                    qff[r * f + cc] = q[i * k + j];
                }
            }
            if lu_solve(&mut qff, &mut rhs, f).is_err() {
                return Err(ClarkeError::QpNotConverged);
            }
            // Step from the current free values toward the subproblem solution,
            // clipping at the first bound hit.
            let mut alpha = T::one();
            let mut blocker: Option<(usize, VarState)> = None;
            for (r, &i) in free.iter().enumerate() {
                let cur = lambda[i];
                let tgt = rhs[r];
                if tgt < T::zero() {
                    let a = (cur - T::zero()) / (cur - tgt);
                    if a < alpha {
                        alpha = a;
                        blocker = Some((i, VarState::Lower));
                    }
                } else if tgt > upper[i] {
                    let a = (upper[i] - cur) / (tgt - cur);
                    if a < alpha {
                        alpha = a;
                        blocker = Some((i, VarState::Upper));
                    }
                }
            }
            if let Some((ib, bound)) = blocker {
                for (r, &i) in free.iter().enumerate() {
                    lambda[i] = lambda[i] + alpha * (rhs[r] - lambda[i]);
                }
                state[ib] = bound;
                lambda[ib] = match bound {
                    VarState::Lower => T::zero(),
                    VarState::Upper => upper[ib],
                    VarState::Free => unreachable!(),
                };
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                lambda[i] = rhs[r];
            }
        }
        // KKT on the bound variables: gradient of the reduced objective.
        let mut worst: Option<(usize, T)> = None;
        for i in 0..k {
            let mut r = c[i];
            for j in 0..k {
                r += q[i * k + j] * lambda[j];
            }
            let viol = match state[i] {
                VarState::Lower => -r,
                VarState::Upper => r,
                VarState::Free => continue,
            };
            if viol > kkt_tol && worst.is_none_or(|(_, v)| viol > v) {
                worst = Some((i, viol));
            }
        }
        match worst {
            Some((i, _)) => state[i] = VarState::Free,
            None => return Ok(lambda),
        }
    }
    Err(ClarkeError::QpNotConverged)
}

/// Solve the Clarke QP at `x` and derive the refined partition: interior
/// multipliers keep their sphere active, saturated ones push the index to
/// the outside/inside sets.
pub fn solve_clarke_qp<T: Real>(
    problem: &ScProblem<T>,
    x: &[T],
    sig: &CellSignature,
    tols: &ClarkeTols<T>,
) -> Result<ClarkeSolution<T>, ClarkeError> {
    solve_clarke_qp_warm(problem, x, sig, None, tols)
}

pub fn solve_clarke_qp_warm<T: Real>(
    problem: &ScProblem<T>,
    x: &[T],
    sig: &CellSignature,
    warm: Option<&[T]>,
    tols: &ClarkeTols<T>,
) -> Result<ClarkeSolution<T>, ClarkeError> {
    let g = active_gradient(problem, &sig.i_plus, x);
    let coeff = real::<T>(2.0) * problem.scale();
    let columns: Vec<Vec<T>> = sig
        .i_zero
        .iter()
        .map(|&i| {
            x.iter()
                .zip(problem.spheres().center(i))
                .map(|(&xj, &cj)| coeff * (xj - cj))
                .collect()
        })
        .collect();

    // Duplicate data points give bit-identical spheres and columns; a
    // repeated sub-function contributes lambda in [0, multiplicity] on the
    // shared column, so merge duplicates into one bounded variable.
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new(); // (first position, members)
    for pos in 0..columns.len() {
        match groups
            .iter_mut()
            .find(|(first, _)| columns[*first] == columns[pos])
        {
            Some((_, members)) => members.push(pos),
            None => groups.push((pos, vec![pos])),
        }
    }

    let merged_cols: Vec<Vec<T>> = groups.iter().map(|(f, _)| columns[*f].clone()).collect();
    let upper: Vec<T> = groups
        .iter()
        .map(|(_, m)| T::from_usize(m.len()).unwrap())
        .collect();
    let merged_warm: Option<Vec<T>> = warm.map(|w| {
        groups
            .iter()
            .map(|(_, m)| m.iter().fold(T::zero(), |acc, &p| acc + w[p]))
            .collect()
    });
    let mu = box_least_squares_bounded(
        &g,
        &merged_cols,
        &upper,
        merged_warm.as_deref(),
        tols.max_iters,
    )?;

    // expand: members of a group share the multiplier evenly
    let mut lambda = vec![T::zero(); columns.len()];
    for (gi, (_, members)) in groups.iter().enumerate() {
        let share = mu[gi] / T::from_usize(members.len()).unwrap();
        for &p in members {
            lambda[p] = share;
        }
    }

    let mut gen_gradient = g;
    for (gi, col) in merged_cols.iter().enumerate() {
        add_scaled(&mut gen_gradient, mu[gi], col);
    }
    let gen_grad_norm = norm(&gen_gradient);
    let is_minimum = gen_grad_norm <= tols.tol_grad;

    // classify whole groups: a merged multiplier at a bound moves every
    // member off the sphere together, an interior one keeps them all on it
    let mut i_star_plus = sig.i_plus.clone();
    let mut i_star_zero = Vec::new();
    let mut i_star_minus = sig.i_minus.clone();
    let mut degenerate = false;
    for (gi, (_, members)) in groups.iter().enumerate() {
        let size = T::from_usize(members.len()).unwrap();
        let band = tols.eps_lambda * size;
        let at_upper = mu[gi] >= upper[gi] - band;
        let at_lower = mu[gi] <= band;
        for &p in members {
            let i = sig.i_zero[p];
            if at_upper {
                i_star_plus.push(i);
            } else if at_lower {
                i_star_minus.push(i);
            } else {
                i_star_zero.push(i);
            }
        }
        if !is_minimum && (at_upper || at_lower) {
            let col = &merged_cols[gi];
            let inner = dot(&gen_gradient, col);
            if inner.abs() <= real::<T>(1e-9) * gen_grad_norm * norm(col) {
                degenerate = true;
            }
        }
    }
    i_star_plus.sort_unstable();
    i_star_zero.sort_unstable();
    i_star_minus.sort_unstable();

    Ok(ClarkeSolution {
        lambda,
        gen_gradient,
        gen_grad_norm,
        i_star_plus,
        i_star_zero,
        i_star_minus,
        is_minimum,
        degenerate,
    })
}

/// KKT violation of a multiplier vector for min ||g + A lambda||^2 on the box.
/// Used by tests and the certification path.
pub fn kkt_residual<T: Real>(g: &[T], columns: &[Vec<T>], lambda: &[T], eps_bound: T) -> T {
    let mut w = g.to_vec();
    for (i, col) in columns.iter().enumerate() {
        add_scaled(&mut w, lambda[i], col);
    }
    let mut res = T::zero();
    for (i, col) in columns.iter().enumerate() {
        let r = dot(&w, col);
        let v = if lambda[i] <= eps_bound {
            (-r).max(T::zero())
        } else if lambda[i] >= T::one() - eps_bound {
            r.max(T::zero())
        } else {
            r.abs()
        };
        res = res.max(v);
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sq;
    use crate::model::{build_problem, signature, Dataset};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn empty_zero_set_reduces_to_plain_gradient() {
        let ds = Dataset::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let p = build_problem(ds, 0.4).unwrap();
        let x = [0.5, 1.0];
        let sig = signature(&p, &x, 1e-9);
        let sol = solve_clarke_qp(&p, &x, &sig, &ClarkeTols::default()).unwrap();
        assert!(sol.lambda.is_empty());
        let g = crate::model::cell_gradient(&p, &sig, &x).unwrap();
        assert_eq!(sol.gen_gradient, g);
    }

    #[test]
    fn single_column_clamps_to_upper_bound() {
        let g = vec![2.0, 0.0];
        let cols = vec![vec![-1.0, 0.0]];
        let l = box_least_squares(&g, &cols, None, 100).unwrap();
        assert_eq!(l, vec![1.0]);
    }

    #[test]
    fn single_column_interior_stationary() {
        let g = vec![1.0, 0.0];
        let cols = vec![vec![-2.0, 0.0]];
        let l = box_least_squares(&g, &cols, None, 100).unwrap();
        assert_relative_eq!(l[0], 0.5, epsilon = 1e-12);
        let mut w = g.clone();
        add_scaled(&mut w, l[0], &cols[0]);
        assert!(norm(&w) < 1e-12);
    }

    fn random_instance(rng: &mut StdRng, k: usize, d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let g: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        (g, cols)
    }

    fn qp_value(g: &[f64], cols: &[Vec<f64>], lambda: &[f64]) -> f64 {
        let mut w = g.to_vec();
        for (i, col) in cols.iter().enumerate() {
            add_scaled(&mut w, lambda[i], col);
        }
        norm_sq(&w)
    }

    /// Convex grid refinement over the box down to resolution 1e-3.
    fn grid_oracle(g: &[f64], cols: &[Vec<f64>], steps: usize) -> Vec<f64> {
        let k = cols.len();
        let mut lo = vec![0.0; k];
        let mut hi = vec![1.0; k];
        let mut best = vec![0.5; k];
        loop {
            let mut best_val = f64::INFINITY;
            let mut idx = vec![0usize; k];
            loop {
                let cand: Vec<f64> = (0..k)
                    .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (steps - 1) as f64)
                    .collect();
                let v = qp_value(g, cols, &cand);
                if v < best_val {
                    best_val = v;
                    best = cand;
                }
                let mut c = 0;
                loop {
                    if c == k {
                        break;
                    }
                    idx[c] += 1;
                    if idx[c] < steps {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
                if c == k {
                    break;
                }
            }
            let width = hi[0] - lo[0];
            if width / (steps - 1) as f64 <= 1e-3 {
                return best;
            }
            for i in 0..k {
                let h = (hi[i] - lo[i]) / (steps - 1) as f64;
                lo[i] = (best[i] - 2.0 * h).max(0.0);
                hi[i] = (best[i] + 2.0 * h).min(1.0);
            }
        }
    }

    #[test]
    fn matches_grid_oracle_on_small_instances() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let k = rng.random_range(1..=3usize);
            let d = rng.random_range(k..k + 4);
            let (g, cols) = random_instance(&mut rng, k, d);
            let l = box_least_squares(&g, &cols, None, 500).unwrap();
            let oracle = grid_oracle(&g, &cols, 17);
            let gap = qp_value(&g, &cols, &l) - qp_value(&g, &cols, &oracle);
            assert!(gap <= 1e-5, "solver should not lose to the grid: gap {gap}");
        }
    }

    #[test]
    fn kkt_residuals_small_up_to_k8() {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..200 {
            let k = rng.random_range(1..=8usize);
            let d = rng.random_range(k..k + 6);
            let (g, cols) = random_instance(&mut rng, k, d);
            let l = box_least_squares(&g, &cols, None, 500).unwrap();
            let res = kkt_residual(&g, &cols, &l, 1e-10);
            let bound = 1e-8 * (1.0 + norm(&g));
            assert!(res <= bound, "kkt {res} > {bound}");
        }
    }

    #[test]
    fn joint_rescaling_leaves_multipliers_fixed() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..100 {
            let k = rng.random_range(1..=5usize);
            let (g, cols) = random_instance(&mut rng, k, k + 2);
            let alpha: f64 = rng.random_range(0.001..1000.0);
            let l0 = box_least_squares(&g, &cols, None, 500).unwrap();
            let g2: Vec<f64> = g.iter().map(|x| x * alpha).collect();
            let cols2: Vec<Vec<f64>> = cols
                .iter()
                .map(|c| c.iter().map(|x| x * alpha).collect())
                .collect();
            let l1 = box_least_squares(&g2, &cols2, None, 500).unwrap();
            for i in 0..k {
                assert!((l0[i] - l1[i]).abs() <= 1e-10, "{} vs {}", l0[i], l1[i]);
            }
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..100 {
            let k = rng.random_range(1..=6usize);
            let (g, cols) = random_instance(&mut rng, k, k + 3);
            let cold = box_least_squares(&g, &cols, None, 500).unwrap();
            let warm_init: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
            let warm = box_least_squares(&g, &cols, Some(&warm_init), 500).unwrap();
            for i in 0..k {
                assert!((cold[i] - warm[i]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn minimum_detection_matches_qp_value() {
        // place x on a sphere so that the QP decides membership of zero
        let ds = Dataset::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let p = build_problem(ds, 0.4).unwrap();
        let on = [6.0f64.sqrt() - 2.0, 0.0];
        let sig = signature(&p, &on, 1e-9);
        assert_eq!(sig.i_zero, vec![0]);
        let sol = solve_clarke_qp(&p, &on, &sig, &ClarkeTols::default()).unwrap();
        assert!(!sol.is_minimum);
        assert_eq!(sol.lambda.len(), 1);
        // the refined partition must cover all indices exactly once
        let total = sol.i_star_plus.len() + sol.i_star_zero.len() + sol.i_star_minus.len();
        assert_eq!(total, 2);
    }
}
