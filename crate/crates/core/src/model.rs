//! The spherical-cluster objective: a point set, a fraction `eta` of the
//! distance variance, and the induced family of sink spheres. The objective
//! F(c) = sum_i max(0, f_i(c)) is piecewise quadratic; each sub-function f_i
//! is a scaled power distance to a sphere S_i, so the sign pattern of the
//! f_i classifies a point into a cell of the sphere arrangement.

use crate::linalg::dist_sq;
use crate::scalar::{real, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("eta = {eta} outside the open interval (0, {max})")]
    EtaOutOfRange { eta: f64, max: f64 },
    #[error("degenerate data: fewer than two distinct points")]
    DegenerateData,
    #[error("non-finite coordinate in input data")]
    NonFiniteData,
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("row {0} has {1} coordinates, expected {2}")]
    DimensionMismatch(usize, usize, usize),
    #[error("cell has positive codimension; gradient only defined on full-dimensional cells")]
    NotFullDimensional,
}

/// An ordered list of n points in R^d, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Real> {
    data: Vec<T>,
    n: usize,
    dim: usize,
}

impl<T: Real> Dataset<T> {
    pub fn new(points: Vec<Vec<T>>) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::TooFewPoints(points.len()));
        }
        let dim = points[0].len();
        let mut data = Vec::with_capacity(points.len() * dim);
        for (row, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(ModelError::DimensionMismatch(row, p.len(), dim));
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(data, points.len(), dim)
    }

    /// Row-major storage: point i occupies `data[i*dim .. (i+1)*dim]`.
    pub fn from_flat(data: Vec<T>, n: usize, dim: usize) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::TooFewPoints(n));
        }
        assert_eq!(data.len(), n * dim, "flat buffer size mismatch");
        if data.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFiniteData);
        }
        let ds = Dataset { data, n, dim };
        let first = ds.point(0);
        if (1..n).all(|i| ds.point(i) == first) {
            return Err(ModelError::DegenerateData);
        }
        Ok(ds)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for p in self.points() {
            for (mj, &pj) in m.iter_mut().zip(p) {
                *mj += pj;
            }
        }
        let inv = T::one() / T::from_usize(self.n).unwrap();
        for mj in &mut m {
            *mj *= inv;
        }
        m
    }

    /// Exact diameter, O(n^2); intended for desk-scale data and tests.
    pub fn diameter(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.n {
            for j in i + 1..self.n {
                best = best.max(dist_sq(self.point(i), self.point(j)));
            }
        }
        best.sqrt()
    }

    /// Diagonal of the bounding box: a cheap upper bound on the diameter.
    pub fn extent(&self) -> T {
        let mut lo = self.point(0).to_vec();
        let mut hi = self.point(0).to_vec();
        for p in self.points() {
            for j in 0..self.dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        lo.iter()
            .zip(&hi)
            .fold(T::zero(), |acc, (&l, &h)| acc + (h - l) * (h - l))
            .sqrt()
    }

    /// Largest admissible eta, exclusive: 1 - 1/n.
    pub fn eta_bound(&self) -> T {
        T::one() - T::one() / T::from_usize(self.n).unwrap()
    }
}

/// A family of spheres given by centers and squared radii: the geometric
/// substrate of the arrangement. Row-major center storage.
#[derive(Debug, Clone)]
pub struct SphereFamily<T: Real> {
    centers: Vec<T>,
    radii_sq: Vec<T>,
    dim: usize,
}

impl<T: Real> SphereFamily<T> {
    pub fn new(centers: Vec<Vec<T>>, radii_sq: Vec<T>) -> Self {
        assert_eq!(centers.len(), radii_sq.len());
        assert!(!centers.is_empty());
        let dim = centers[0].len();
        let mut flat = Vec::with_capacity(centers.len() * dim);
        for c in &centers {
            assert_eq!(c.len(), dim);
            flat.extend_from_slice(c);
        }
        SphereFamily {
            centers: flat,
            radii_sq,
            dim,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.radii_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii_sq.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn center(&self, i: usize) -> &[T] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn radius_sq(&self, i: usize) -> T {
        self.radii_sq[i]
    }

    /// Power distance of x to sphere i: ||x - c_i||^2 - R_i^2.
    #[inline]
    pub fn power(&self, i: usize, x: &[T]) -> T {
        dist_sq(x, self.center(i)) - self.radii_sq[i]
    }

    /// Mean of the centers indexed by `indices`.
    pub fn centers_mean(&self, indices: &[usize]) -> Vec<T> {
        assert!(!indices.is_empty());
        let mut m = vec![T::zero(); self.dim];
        for &i in indices {
            for (mj, &cj) in m.iter_mut().zip(self.center(i)) {
                *mj += cj;
            }
        }
        let inv = T::one() / T::from_usize(indices.len()).unwrap();
        for mj in &mut m {
            *mj *= inv;
        }
        m
    }
}

/// Sign pattern of a point against every sphere: the three-set partition
/// (outside / on / inside) identifying its cell in the arrangement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSignature {
    pub i_plus: Vec<usize>,
    pub i_zero: Vec<usize>,
    pub i_minus: Vec<usize>,
}

impl CellSignature {
    pub fn codimension(&self) -> usize {
        self.i_zero.len()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.i_zero.is_empty()
    }

    pub fn total(&self) -> usize {
        self.i_plus.len() + self.i_zero.len() + self.i_minus.len()
    }
}

/// Immutable problem instance: data, eta, and the derived sink spheres.
#[derive(Debug, Clone)]
pub struct ScProblem<T: Real> {
    dataset: Dataset<T>,
    eta: T,
    eta_prime: T,
    scale: T,
    mean: Vec<T>,
    spheres: SphereFamily<T>,
    extent: T,
}

impl<T: Real> ScProblem<T> {
    pub fn dataset(&self) -> &Dataset<T> {
        &self.dataset
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// eta' = n eta / (n - 1); eta < 1 - 1/n is equivalent to eta' < 1.
    pub fn eta_prime(&self) -> T {
        self.eta_prime
    }

    /// 1 - eta', the leading quadratic coefficient of every sub-function.
    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn spheres(&self) -> &SphereFamily<T> {
        &self.spheres
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Bounding-box diagonal of the data, used as a scale reference.
    pub fn extent(&self) -> T {
        self.extent
    }
}

/// Build the problem instance: sink centers c_i = (x_i - eta' xbar) / (1 - eta')
/// and squared radii assembled from centered sums so they stay positive.
pub fn build_problem<T: Real>(dataset: Dataset<T>, eta: T) -> Result<ScProblem<T>, ModelError> {
    let n = dataset.len();
    let max_eta = dataset.eta_bound();
    if !(eta > T::zero() && eta < max_eta) {
        return Err(ModelError::EtaOutOfRange {
            eta: eta.to_f64().unwrap_or(f64::NAN),
            max: max_eta.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n_t = T::from_usize(n).unwrap();
    let eta_prime = n_t * eta / (n_t - T::one());
    let scale = T::one() - eta_prime;
    let mean = dataset.mean();
    let dim = dataset.dim();

    let mut centers = Vec::with_capacity(n);
    let mut radii_sq = Vec::with_capacity(n);
    let pull = eta_prime / scale;
    for i in 0..n {
        let xi = dataset.point(i);
        // c_i = x_i + (eta'/(1-eta')) (x_i - xbar)
        let mut ci = Vec::with_capacity(dim);
        for j in 0..dim {
            ci.push(xi[j] + pull * (xi[j] - mean[j]));
        }
        // R_i^2 = ||x_i - c_i||^2 + (eta'/n) / (1-eta') * sum_j ||x_j - x_i||^2,
        // equal to the closed form but a sum of non-negative terms.
        let spread = dataset
            .points()
            .fold(T::zero(), |acc, xj| acc + dist_sq(xj, xi));
        let r_sq = dist_sq(xi, &ci) + eta_prime / n_t / scale * spread;
        centers.push(ci);
        radii_sq.push(r_sq);
    }
    if radii_sq.iter().any(|r| !(*r > T::zero())) {
        return Err(ModelError::DegenerateData);
    }
    let extent = dataset.extent();
    Ok(ScProblem {
        dataset,
        eta,
        eta_prime,
        scale,
        mean,
        spheres: SphereFamily::new(centers, radii_sq),
        extent,
    })
}

/// Sub-function f_i(c) in factored form: (1 - eta') (||c - c_i||^2 - R_i^2).
pub fn f_sub<T: Real>(problem: &ScProblem<T>, i: usize, c: &[T]) -> T {
    problem.scale * problem.spheres.power(i, c)
}

/// f_i(c) in its defining form ||x_i - c||^2 - eta/(n-1) sum_j ||x_j - c||^2.
/// Kept as the second route for cross-checking the factored evaluation.
pub fn f_sub_direct<T: Real>(problem: &ScProblem<T>, i: usize, c: &[T]) -> T {
    let spread = problem
        .dataset
        .points()
        .fold(T::zero(), |acc, xj| acc + dist_sq(xj, c));
    let n_t = T::from_usize(problem.len()).unwrap();
    dist_sq(problem.dataset.point(i), c) - problem.eta / (n_t - T::one()) * spread
}

/// Objective F(c) = sum_i max(0, f_i(c)).
pub fn objective<T: Real>(problem: &ScProblem<T>, c: &[T]) -> T {
    let mut acc = T::zero();
    for i in 0..problem.len() {
        let p = problem.spheres.power(i, c);
        if p > T::zero() {
            acc += p;
        }
    }
    problem.scale * acc
}

/// Unbiased variance of distances from the data to `c`: sum ||x_i - c||^2 / (n-1).
pub fn distance_variance<T: Real>(dataset: &Dataset<T>, c: &[T]) -> T {
    let spread = dataset
        .points()
        .fold(T::zero(), |acc, x| acc + dist_sq(x, c));
    spread / T::from_usize(dataset.len() - 1).unwrap()
}

/// Classify `c` against every sphere. Index i lands in `i_zero` when
/// | ||c - c_i||^2 - R_i^2 | <= tol_sign * max(1, R_i^2).
pub fn signature<T: Real>(problem: &ScProblem<T>, c: &[T], tol_sign: T) -> CellSignature {
    signature_of(problem.spheres(), c, tol_sign)
}

pub fn signature_of<T: Real>(spheres: &SphereFamily<T>, c: &[T], tol_sign: T) -> CellSignature {
    let mut sig = CellSignature {
        i_plus: Vec::new(),
        i_zero: Vec::new(),
        i_minus: Vec::new(),
    };
    for i in 0..spheres.len() {
        let p = spheres.power(i, c);
        let band = tol_sign * T::one().max(spheres.radius_sq(i));
        if p.abs() <= band {
            sig.i_zero.push(i);
        } else if p > T::zero() {
            sig.i_plus.push(i);
        } else {
            sig.i_minus.push(i);
        }
    }
    sig
}

/// Gradient of F restricted to a full-dimensional cell:
/// 2 (1 - eta') #I+ (c - mean of c_i over I+).
pub fn cell_gradient<T: Real>(
    problem: &ScProblem<T>,
    sig: &CellSignature,
    c: &[T],
) -> Result<Vec<T>, ModelError> {
    if !sig.is_full_dimensional() {
        return Err(ModelError::NotFullDimensional);
    }
    Ok(active_gradient(problem, &sig.i_plus, c))
}

/// 2 (1 - eta') #J (c - c_J) for an arbitrary index set J; zero for empty J.
pub fn active_gradient<T: Real>(problem: &ScProblem<T>, active: &[usize], c: &[T]) -> Vec<T> {
    if active.is_empty() {
        return vec![T::zero(); c.len()];
    }
    let cj = problem.spheres.centers_mean(active);
    let k = T::from_usize(active.len()).unwrap();
    let coeff = real::<T>(2.0) * problem.scale * k;
    c.iter().zip(&cj).map(|(&x, &m)| coeff * (x - m)).collect()
}
