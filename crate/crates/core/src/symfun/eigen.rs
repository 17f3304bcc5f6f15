//! Cyclic Jacobi eigen-solver for small symmetric matrices.

use super::matrix::{Mat, SymMatrix};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order and, when requested, the matching orthonormal
/// eigenvectors stored as columns.
pub(crate) fn jacobi<T: Real>(m: &SymMatrix<T>, want_vectors: bool) -> (Vec<T>, Option<Mat<T>>) {
    let n = m.dim();
    let mut a = m.to_mat();
    let mut v = want_vectors.then(|| Mat::identity(n));
    let scale = m.frobenius_norm();
    if scale == T::zero() {
        return (vec![T::zero(); n], v);
    }
    let tol = T::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(T::one()));
                let c = T::one() / t.hypot(T::one());
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = v.map(|v| Mat::from_fn(n, |r, c| v.get(r, order[c])));
    (values, vectors)
}

impl<T: Real> SymMatrix<T> {
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        jacobi(self, false).0
    }

    /// Eigenvalues (ascending) and orthonormal eigenvectors as matrix columns.
    pub fn eigen(&self) -> (Vec<T>, Mat<T>) {
        let (values, vectors) = jacobi(self, true);
        (values, vectors.expect("vectors requested"))
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> SymMatrix<T> {
        let (values, vectors) = self.eigen();
        let n = self.dim();
        SymMatrix::from_fn(n, |i, j| {
            (0..n).fold(T::zero(), |acc, k| acc + vectors.get(i, k) * f(values[k]) * vectors.get(j, k))
        })
    }
}
