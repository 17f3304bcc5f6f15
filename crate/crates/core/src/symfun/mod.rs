//! Symmetric-function calculus on small symmetric matrices: elementary symmetric
//! functions of the spectrum, Newton transformation tensors, the polarization of
//! `σ₂`, and Gårding cone membership.

mod eigen;
mod matrix;

pub use matrix::{dot, norm, Mat, SmallVector, SymMatrix, MAX_DIM};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Position of a matrix in the nested Gårding cones: `max_k` is the largest `k`
/// with `σ_j > 0` for every `1 <= j <= k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConeLabel {
    pub max_k: usize,
}

impl ConeLabel {
    pub fn contains(&self, k: usize) -> bool {
        self.max_k >= k
    }
}

/// All elementary symmetric functions `σ_0..=σ_d` of the eigenvalues.
pub fn elementary_symmetric_all<T: Real>(m: &SymMatrix<T>) -> Vec<T> {
    elementary_symmetric_of(&m.eigenvalues())
}

/// Elementary symmetric polynomials of a list of numbers, `e_0 = 1`.
pub fn elementary_symmetric_of<T: Real>(values: &[T]) -> Vec<T> {
    let mut e = vec![T::zero(); values.len() + 1];
    e[0] = T::one();
    for (count, &x) in values.iter().enumerate() {
        for k in (1..=count + 1).rev() {
            let prev = e[k - 1];
            e[k] += x * prev;
        }
    }
    e
}

/// `σ_k` of the eigenvalues of `m`; `σ_0 = 1`.
pub fn elementary_symmetric<T: Real>(m: &SymMatrix<T>, k: usize) -> Result<T> {
    if k > m.dim() {
        return domain(format!("sigma_{k} undefined for a {0}x{0} matrix", m.dim()));
    }
    if k == 0 {
        return Ok(T::one());
    }
    Ok(elementary_symmetric_all(m)[k])
}

pub fn determinant<T: Real>(m: &SymMatrix<T>) -> T {
    m.eigenvalues().into_iter().fold(T::one(), |acc, x| acc * x)
}

/// `T_1(M) = tr(M)·I − M`, valid in every dimension (it vanishes for 1×1).
pub fn newton_first<T: Real>(m: &SymMatrix<T>) -> SymMatrix<T> {
    SymMatrix::scalar(m.dim(), m.trace()).sub(m)
}

/// Newton transformation tensor `T_k(M)` by the recursion
/// `T_0 = I`, `T_k = σ_k I − T_{k−1} M`, with `σ_k = tr(T_{k−1} M)/k`.
pub fn newton_tensor<T: Real>(m: &SymMatrix<T>, k: usize) -> Result<SymMatrix<T>> {
    if k >= m.dim() {
        return domain(format!("Newton tensor T_{k} requires k <= {} for a {1}x{1} matrix", m.dim() - 1, m.dim()));
    }
    let n = m.dim();
    let mut t = SymMatrix::identity(n);
    for j in 1..=k {
        let tm = t.mul(m);
        let sigma = tm.trace() / T::from_usize_lossy(j);
        let mut next = Mat::from_fn(n, |r, c| -tm.get(r, c));
        for i in 0..n {
            next.set(i, i, next.get(i, i) + sigma);
        }
        // T_{j-1} commutes with M, so the product is symmetric up to rounding
        t = next.symmetric_part();
    }
    Ok(t)
}

/// `Σ₂(A, B) = tr(A)tr(B) − tr(AB)`, the symmetric bilinear form with `Σ₂(A, A) = 2σ₂(A)`.
pub fn polarization_sigma2<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return domain(format!("dimension mismatch {} vs {}", a.dim(), b.dim()));
    }
    Ok(a.trace() * b.trace() - a.trace_product(b))
}

/// Mixed Newton tensor `[T₂](A, B)`, defined by
/// `2[T₂](A, B) = Σ₂(A, B)·I − T₁(A)B − T₁(B)A`.
pub fn newton_tensor_mixed<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let s2 = polarization_sigma2(a, b)?;
    let n = a.dim();
    let (ta, tb) = (a.trace(), b.trace());
    let ab = a.mul(b);
    let half = T::lit(0.5);
    // T1(A)B + T1(B)A = tr(A)B + tr(B)A − (AB + BA)
    Ok(SymMatrix::from_fn(n, |i, j| {
        let sym_ab = ab.get(i, j) + ab.get(j, i);
        let cross = ta * b.get(i, j) + tb * a.get(i, j) - sym_ab;
        let diag = if i == j { s2 } else { T::zero() };
        half * (diag - cross)
    }))
}

/// Gårding cone membership with exact sign tests on the computed `σ_j`.
pub fn cone_membership<T: Real>(m: &SymMatrix<T>) -> ConeLabel {
    cone_membership_with_margin(m, T::zero())
}

/// Like [`cone_membership`] but requires `σ_j > margin`.
pub fn cone_membership_with_margin<T: Real>(m: &SymMatrix<T>, margin: T) -> ConeLabel {
    label_from_sigmas(&elementary_symmetric_all(m), margin)
}

pub(crate) fn label_from_sigmas<T: Real>(sigmas: &[T], margin: T) -> ConeLabel {
    let max_k = sigmas[1..].iter().take_while(|&&s| s > margin).count();
    ConeLabel { max_k }
}

/// `min_{1<=j<=k} σ_j(M)`: positive exactly when `M ∈ Γ_k⁺`.
pub fn cone_margin<T: Real>(m: &SymMatrix<T>, k: usize) -> Result<T> {
    if k == 0 || k > m.dim() {
        return domain(format!("cone index {k} outside 1..={}", m.dim()));
    }
    let sigmas = elementary_symmetric_all(m);
    Ok(sigmas[1..=k].iter().fold(T::infinity(), |acc, &s| acc.min(s)))
}
