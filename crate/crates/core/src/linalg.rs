//! Small dense linear algebra: vector helpers, LU solves for the tiny systems
//! arising on sphere intersections, and a Jacobi eigensolver for covariance
//! matrices. Everything operates on plain slices.

use crate::scalar::{real, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("singular linear system")]
    Singular,
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

#[inline]
pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    dist_sq(a, b).sqrt()
}

/// y += alpha * x
#[inline]
pub fn add_scaled<T: Real>(y: &mut [T], alpha: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale_in_place<T: Real>(a: &mut [T], alpha: T) {
    for x in a {
        *x *= alpha;
    }
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Normalize in place; returns the original norm (zero vectors are left untouched).
pub fn normalize<T: Real>(a: &mut [T]) -> T {
    let n = norm(a);
    if n > T::zero() {
        scale_in_place(a, T::one() / n);
    }
    n
}

/// Solve `a x = b` in place by LU with partial pivoting; `a` is n x n row-major
/// and is destroyed, the solution overwrites `b`. Returns a cheap condition
/// estimate (ratio of extreme pivot magnitudes).
pub fn lu_solve<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> Result<T, LinalgError> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut max_piv = T::zero();
    let mut min_piv = T::infinity();
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for r in k + 1..n {
            let v = a[r * n + k].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best == T::zero() || !best.is_finite() {
            return Err(LinalgError::Singular);
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        max_piv = max_piv.max(best);
        min_piv = min_piv.min(best);
        let pivot = a[k * n + k];
        for r in k + 1..n {
            let factor = a[r * n + k] / pivot;
            a[r * n + k] = T::zero();
            for c in k + 1..n {
                let akc = a[k * n + c];
                a[r * n + c] -= factor * akc;
            }
            b[r] -= factor * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
    Ok(max_piv / min_piv)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in decreasing order with matching unit eigenvectors
/// (row `k` of the returned matrix is the k-th eigenvector).
pub fn symmetric_eigen<T: Real>(matrix: &[T], d: usize) -> (Vec<T>, Vec<T>) {
    debug_assert_eq!(matrix.len(), d * d);
    let mut m = matrix.to_vec();
    let mut v = vec![T::zero(); d * d];
    for i in 0..d {
        v[i * d + i] = T::one();
    }
    let tol = real::<T>(1e-14);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..d {
            for q in p + 1..d {
                off += m[p * d + q] * m[p * d + q];
            }
        }
        let diag_scale = (0..d).fold(T::zero(), |acc, i| acc + m[i * d + i] * m[i * d + i]);
        if off <= tol * tol * (T::one() + diag_scale) {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (real::<T>(2.0) * apq);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (theta * theta + T::one()).sqrt())
                } else {
                    -T::one() / (-theta + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vpk = v[p * d + k];
                    let vqk = v[q * d + k];
                    v[p * d + k] = c * vpk - s * vqk;
                    v[q * d + k] = s * vpk + c * vqk;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        m[j * d + j]
            .partial_cmp(&m[i * d + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| m[i * d + i]).collect();
    let mut eigenvectors = vec![T::zero(); d * d];
    for (row, &i) in order.iter().enumerate() {
        eigenvectors[row * d..(row + 1) * d].copy_from_slice(&v[i * d..(i + 1) * d]);
    }
    (eigenvalues, eigenvectors)
}
