//! Geometry on the sphere arrangement: intersection spheres, constrained
//! minimizers on an intersection, and first-crossing computations along
//! lines and great-circle arcs. All operations take an explicit
//! [`SphereFamily`] so they work on any sphere system, not only problem sinks.

use crate::linalg::{add_scaled, dist_sq, dot, lu_solve, norm, norm_sq, sub, LinalgError};
use crate::model::{CellSignature, SphereFamily};
use crate::scalar::{real, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("sphere intersection system is numerically rank-deficient")]
    SingularIntersection,
    #[error("spheres have empty common intersection")]
    EmptyIntersection,
    #[error("quadratic center lies in the affine hull of the sphere centers")]
    DegenerateProjection,
    #[error("geodesic endpoints are antipodal")]
    AntipodalEndpoints,
    #[error("numerical loss while building the geodesic frame")]
    NumericalLoss,
}

/// Tolerances for the geometric predicates.
#[derive(Debug, Clone)]
pub struct GeomTols<T> {
    /// Incidence band for "point lies on sphere i", relative to max(1, R_i^2).
    pub tol_on: T,
    /// Two crossings tie when their parameters differ by tie_rel * (1 + t).
    pub tie_rel: T,
    /// Reject linear systems whose pivot-ratio estimate exceeds this.
    pub cond_max: T,
}

impl<T: Real> Default for GeomTols<T> {
    fn default() -> Self {
        GeomTols {
            tol_on: real(1e-9),
            tie_rel: real(1e-10),
            cond_max: real(1e12),
        }
    }
}

/// The sphere S = intersection of the spheres indexed by `indices`:
/// a (d - |I|)-dimensional sphere with center in the affine hull of the
/// participating centers.
#[derive(Debug, Clone)]
pub struct IntersectionSphere<T> {
    pub center: Vec<T>,
    pub radius_sq: T,
    pub indices: Vec<usize>,
    /// Coefficients of the center over the participating sphere centers; sums to 1.
    pub barycentric: Vec<T>,
}

/// Solve for the center/radius of the common intersection of the spheres in
/// `indices`. The center is the unique affine combination of the centers lying
/// on every pairwise radical hyperplane; working in coordinates relative to
/// the first center keeps the system well scaled.
pub fn sphere_intersection<T: Real>(
    spheres: &SphereFamily<T>,
    indices: &[usize],
    tols: &GeomTols<T>,
) -> Result<IntersectionSphere<T>, GeomError> {
    assert!(!indices.is_empty(), "need at least one sphere");
    // duplicate spheres (duplicate data points) collapse to one representative
    let mut reps: Vec<usize> = Vec::new();
    for &i in indices {
        let dup = reps.iter().any(|&r| {
            spheres.center(r) == spheres.center(i) && spheres.radius_sq(r) == spheres.radius_sq(i)
        });
        if !dup {
            reps.push(i);
        }
    }
    let m = reps.len();
    let c0 = spheres.center(reps[0]);
    let r0_sq = spheres.radius_sq(reps[0]);
    let lambda_reps: Vec<T>;
    let mut center = c0.to_vec();
    if m == 1 {
        lambda_reps = vec![T::one()];
    } else {
        // Relative centers: rel[i] = c_i - c_0, with rel[0] = 0.
        let rel: Vec<Vec<T>> = reps.iter().map(|&i| sub(spheres.center(i), c0)).collect();
        let mut a = vec![T::zero(); m * m];
        let mut b = vec![T::zero(); m];
        for k in 1..m {
            let rk_sq = spheres.radius_sq(reps[k]);
            for i in 0..m {
                a[(k - 1) * m + i] = dot(&rel[i], &rel[k]);
            }
            b[k - 1] = (r0_sq - rk_sq + norm_sq(&rel[k])) / real::<T>(2.0);
        }
        for i in 0..m {
            a[(m - 1) * m + i] = T::one();
        }
        b[m - 1] = T::one();
        let cond = lu_solve(&mut a, &mut b, m)
            .map_err(|LinalgError::Singular| GeomError::SingularIntersection)?;
        if !(cond < tols.cond_max) {
            return Err(GeomError::SingularIntersection);
        }
        lambda_reps = b;
        for i in 0..m {
            add_scaled(&mut center, lambda_reps[i], &rel[i]);
        }
    }
    let radius_sq = r0_sq - dist_sq(c0, &center);
    if radius_sq <= T::zero() {
        return Err(GeomError::EmptyIntersection);
    }
    // map weights back: each representative (a first occurrence) carries the
    // full weight of its duplicate group, duplicates get zero
    let mut barycentric = vec![T::zero(); indices.len()];
    for (r, &rep) in reps.iter().enumerate() {
        let pos = indices.iter().position(|&i| i == rep).unwrap();
        barycentric[pos] = lambda_reps[r];
    }
    Ok(IntersectionSphere {
        center,
        radius_sq,
        indices: indices.to_vec(),
        barycentric,
    })
}

/// Orthogonal projection of `p` onto the affine hull of the centers indexed
/// by `indices` (solves the Gram system of the difference basis).
fn project_to_affine_hull<T: Real>(
    spheres: &SphereFamily<T>,
    indices: &[usize],
    p: &[T],
    tols: &GeomTols<T>,
) -> Result<Vec<T>, GeomError> {
    let c0 = spheres.center(indices[0]);
    // coincident centers span nothing extra and would make the Gram singular
    let mut unique: Vec<usize> = Vec::new();
    for &i in &indices[1..] {
        if spheres.center(i) != c0 && !unique.iter().any(|&u| spheres.center(u) == spheres.center(i))
        {
            unique.push(i);
        }
    }
    if unique.is_empty() {
        return Ok(c0.to_vec());
    }
    let basis: Vec<Vec<T>> = unique
        .iter()
        .map(|&i| sub(spheres.center(i), c0))
        .collect();
    let m = basis.len();
    let mut gram = vec![T::zero(); m * m];
    let mut rhs = vec![T::zero(); m];
    let rel_p = sub(p, c0);
    for i in 0..m {
        for j in 0..m {
            gram[i * m + j] = dot(&basis[i], &basis[j]);
        }
        rhs[i] = dot(&rel_p, &basis[i]);
    }
    let cond = lu_solve(&mut gram, &mut rhs, m).map_err(|LinalgError::Singular| GeomError::SingularIntersection)?;
    if !(cond < tols.cond_max) {
        return Err(GeomError::SingularIntersection);
    }
    let mut proj = c0.to_vec();
    for i in 0..m {
        add_scaled(&mut proj, rhs[i], &basis[i]);
    }
    Ok(proj)
}

/// Minimize the cell quadratic of index set `quad_set` over the intersection
/// S of the spheres in `on_set`. The two critical points are the antipodal
/// pair c_S +- R_S b/||b|| with b the offset of the quadratic's center from
/// the affine hull; the nearer one is the minimizer.
pub fn min_on_intersection<T: Real>(
    spheres: &SphereFamily<T>,
    on_set: &[usize],
    quad_set: &[usize],
    tols: &GeomTols<T>,
) -> Result<Vec<T>, GeomError> {
    assert!(!quad_set.is_empty(), "empty quadratic index set");
    let inter = sphere_intersection(spheres, on_set, tols)?;
    min_on_intersection_with(spheres, &inter, quad_set, tols)
}

/// Variant taking a precomputed intersection sphere.
pub fn min_on_intersection_with<T: Real>(
    spheres: &SphereFamily<T>,
    inter: &IntersectionSphere<T>,
    quad_set: &[usize],
    tols: &GeomTols<T>,
) -> Result<Vec<T>, GeomError> {
    let target = spheres.centers_mean(quad_set);
    let proj = project_to_affine_hull(spheres, &inter.indices, &target, tols)?;
    let mut offset = sub(&target, &proj);
    let offset_norm = norm(&offset);
    let scale = T::one() + norm(&target).max(norm(&proj));
    if offset_norm <= real::<T>(1e-12) * scale {
        return Err(GeomError::DegenerateProjection);
    }
    let radius = inter.radius_sq.sqrt();
    for w in &mut offset {
        *w = *w / offset_norm * radius;
    }
    let mut plus = inter.center.clone();
    let mut minus = inter.center.clone();
    for j in 0..plus.len() {
        plus[j] += offset[j];
        minus[j] -= offset[j];
    }
    if dist_sq(&plus, &target) <= dist_sq(&minus, &target) {
        Ok(plus)
    } else {
        Ok(minus)
    }
}

/// A boundary hit along a half-line: the crossing point, its parameter, the
/// indices that landed on their spheres, and the updated signature.
#[derive(Debug, Clone)]
pub struct LineCrossing<T> {
    pub point: Vec<T>,
    pub t: T,
    pub changed: Vec<usize>,
    pub signature: CellSignature,
}

/// Roots of t^2 + b t + c = 0 via the cancellation-free form.
fn stable_quadratic_roots<T: Real>(b: T, c: T) -> Option<(T, T)> {
    let disc = b * b - real::<T>(4.0) * c;
    if disc < T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    let q = if b >= T::zero() {
        -(b + sq) / real::<T>(2.0)
    } else {
        -(b - sq) / real::<T>(2.0)
    };
    if q == T::zero() {
        // b ~ 0 and c ~ 0: double root at the origin
        return Some((T::zero(), T::zero()));
    }
    Some((q, c / q))
}

/// First point along x + t u (t > 0) where some sphere of I+ or I- is hit.
/// Spheres currently incident to x contribute only their far root. Returns
/// `None` when no sphere is crossed on the half-line.
pub fn line_crossing<T: Real>(
    spheres: &SphereFamily<T>,
    x: &[T],
    direction: &[T],
    sig: &CellSignature,
    tols: &GeomTols<T>,
) -> Option<LineCrossing<T>> {
    let mut u = direction.to_vec();
    let unorm = crate::linalg::normalize(&mut u);
    if unorm == T::zero() {
        return None;
    }
    let mut best_t = T::infinity();
    let mut changed: Vec<usize> = Vec::new();
    for &i in sig.i_plus.iter().chain(sig.i_minus.iter()) {
        let ci = spheres.center(i);
        let b = real::<T>(2.0) * (dot(&u, x) - dot(&u, ci));
        let c = spheres.power(i, x);
        let Some((r1, r2)) = stable_quadratic_roots(b, c) else {
            continue;
        };
        let incident = c.abs() <= tols.tol_on * T::one().max(spheres.radius_sq(i));
        let cand = if incident {
            // the root near zero is the sphere we are standing on
            let far = if r1.abs() >= r2.abs() { r1 } else { r2 };
            if far > T::zero() {
                Some(far)
            } else {
                None
            }
        } else {
            match (r1 > T::zero(), r2 > T::zero()) {
                (true, true) => Some(r1.min(r2)),
                (true, false) => Some(r1),
                (false, true) => Some(r2),
                (false, false) => None,
            }
        };
        let Some(t) = cand else { continue };
        let tie = tols.tie_rel * (T::one() + best_t.min(t));
        if t < best_t - tie {
            best_t = t;
            changed.clear();
            changed.push(i);
        } else if (t - best_t).abs() <= tie {
            changed.push(i);
            best_t = best_t.min(t);
        }
    }
    if !best_t.is_finite() {
        return None;
    }
    let mut point = x.to_vec();
    add_scaled(&mut point, best_t, &u);
    changed.sort_unstable();
    Some(LineCrossing {
        point,
        t: best_t,
        signature: move_to_zero(sig, &changed),
        changed,
    })
}

/// Move `changed` indices of a signature into the zero set.
pub fn move_to_zero(sig: &CellSignature, changed: &[usize]) -> CellSignature {
    let mut out = CellSignature {
        i_plus: sig.i_plus.iter().copied().filter(|i| !changed.contains(i)).collect(),
        i_zero: sig.i_zero.clone(),
        i_minus: sig.i_minus.iter().copied().filter(|i| !changed.contains(i)).collect(),
    };
    out.i_zero.extend_from_slice(changed);
    out.i_zero.sort_unstable();
    out.i_zero.dedup();
    out
}

/// A crossing on the great-circle arc from x toward y on an intersection sphere.
#[derive(Debug, Clone)]
pub struct GeodesicCrossing<T> {
    pub point: Vec<T>,
    pub changed: Vec<usize>,
    /// Coordinates of the crossing in the (u, v) frame of the arc plane.
    pub s: T,
    pub t: T,
    pub signature: CellSignature,
}

#[derive(Debug, Clone)]
pub enum GeodesicOutcome<T> {
    Crossing(GeodesicCrossing<T>),
    ReachedTarget(Vec<T>),
}

/// Walk the geodesic from `x` toward `y` on the intersection sphere and find
/// the first point where a sphere of I+ or I- is crossed; `ReachedTarget` if
/// the arc reaches `y` first. Candidates live in the plane spanned by the
/// orthonormal frame u = nu(x - c_S), v = nu(y - c_S - <y - c_S, u> u).
pub fn geodesic_crossing<T: Real>(
    spheres: &SphereFamily<T>,
    x: &[T],
    y: &[T],
    inter: &IntersectionSphere<T>,
    sig: &CellSignature,
    tols: &GeomTols<T>,
) -> Result<GeodesicOutcome<T>, GeomError> {
    let c_s = &inter.center;
    let r_sq = inter.radius_sq;
    let r = r_sq.sqrt();
    let mut u = sub(x, c_s);
    let un = crate::linalg::normalize(&mut u);
    if un <= real::<T>(1e-14) * (T::one() + r) {
        return Err(GeomError::NumericalLoss);
    }
    let yc = sub(y, c_s);
    let s_y = dot(&yc, &u);
    let mut v = yc.clone();
    add_scaled(&mut v, -s_y, &u);
    let vn = crate::linalg::normalize(&mut v);
    if vn <= real::<T>(1e-12) * (T::one() + r) {
        return if s_y < T::zero() {
            Err(GeomError::AntipodalEndpoints)
        } else {
            Err(GeomError::NumericalLoss)
        };
    }
    let phi_y = vn.atan2(s_y); // in (0, pi)
    let phi_tiny = real::<T>(1e-12) * (T::one() + phi_y);
    let mut best_phi = T::infinity();
    let mut changed: Vec<usize> = Vec::new();
    for &i in sig.i_plus.iter().chain(sig.i_minus.iter()) {
        let dvec = sub(spheres.center(i), c_s);
        let wx = dot(&dvec, &u);
        let wy = dot(&dvec, &v);
        let w_sq = wx * wx + wy * wy;
        if w_sq <= real::<T>(1e-28) * (T::one() + norm_sq(&dvec)) {
            continue; // sphere centered on the arc axis: no transverse circle crossing
        }
        let d_i = (r_sq + norm_sq(&dvec) - spheres.radius_sq(i)) / real::<T>(2.0);
        let delta = r_sq - d_i * d_i / w_sq;
        if delta <= T::zero() {
            continue;
        }
        let w_n = w_sq.sqrt();
        let rho = delta.sqrt() / w_n;
        let base = d_i / w_sq;
        let cands = [
            (base * wx - rho * wy, base * wy + rho * wx),
            (base * wx + rho * wy, base * wy - rho * wx),
        ];
        let incident = spheres.power(i, x).abs() <= tols.tol_on * T::one().max(spheres.radius_sq(i));
        let mut phis: Vec<T> = cands
            .iter()
            .filter(|(_, t)| *t >= -real::<T>(1e-12) * r)
            .map(|(s, t)| t.max(T::zero()).atan2(*s))
            .collect();
        if incident {
            // drop the intersection we are standing on (the smaller angle)
            if phis.len() == 2 {
                let keep = if phis[0] >= phis[1] { phis[0] } else { phis[1] };
                phis = vec![keep];
            } else {
                phis.clear();
            }
        }
        for phi in phis {
            if phi < phi_tiny {
                continue;
            }
            let tie = tols.tie_rel * (T::one() + best_phi.min(phi));
            if phi > phi_y + tie {
                continue;
            }
            if phi < best_phi - tie {
                best_phi = phi;
                changed.clear();
                changed.push(i);
            } else if (phi - best_phi).abs() <= tie {
                changed.push(i);
                best_phi = best_phi.min(phi);
            }
        }
    }
    if !best_phi.is_finite() {
        return Ok(GeodesicOutcome::ReachedTarget(y.to_vec()));
    }
    let (s, t) = (r * best_phi.cos(), r * best_phi.sin());
    let mut point = c_s.clone();
    add_scaled(&mut point, s, &u);
    add_scaled(&mut point, t, &v);
    changed.sort_unstable();
    changed.dedup();
    Ok(GeodesicOutcome::Crossing(GeodesicCrossing {
        point,
        signature: move_to_zero(sig, &changed),
        changed,
        s,
        t,
    }))
}
