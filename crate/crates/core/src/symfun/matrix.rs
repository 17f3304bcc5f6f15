//! Small dense matrices: a general square [`Mat`] for intermediate products and a
//! [`SymMatrix`] whose symmetry is guaranteed by construction.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Largest supported dimension.
pub const MAX_DIM: usize = 16;

// 6x6 fits inline; larger matrices spill to the heap.
pub(crate) type Storage<T> = SmallVec<[T; 36]>;

/// Short vector used alongside the matrices.
pub type SmallVector<T> = SmallVec<[T; 8]>;

fn check_dim(dim: usize) {
    assert!((1..=MAX_DIM).contains(&dim), "matrix dimension {dim} outside 1..={MAX_DIM}");
}

/// Dense row-major square matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    dim: usize,
    data: Storage<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        Self { dim, data: SmallVec::from_elem(T::zero(), dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        check_dim(dim);
        let mut data: Storage<T> = SmallVec::from_elem(T::zero(), dim * dim);
        for (k, v) in data.iter_mut().enumerate() {
            *v = f(k / dim, k % dim);
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data.as_slice()[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn mul(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> SmallVector<T> {
        assert_eq!(x.len(), self.dim);
        let mut out = SmallVector::from_elem(T::zero(), self.dim);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.dim)) {
            *o = row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
        out
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let n = self.dim;
        let mut acc = T::zero();
        for i in 0..n {
            let mut row = T::zero();
            for j in 0..n {
                row += self.data[i * n + j] * y[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// `(M + Mᵀ)/2`.
    pub fn symmetric_part(&self) -> SymMatrix<T> {
        let half = T::lit(0.5);
        SymMatrix::from_fn(self.dim, |i, j| half * (self.get(i, j) + self.get(j, i)))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Maximum entrywise deviation of `MᵀM` from the identity.
    pub fn orthogonality_defect(&self) -> T {
        let mtm = self.transpose().mul(self);
        let id = Mat::identity(self.dim);
        (0..self.dim * self.dim).fold(T::zero(), |m, k| m.max((mtm.data[k] - id.data[k]).abs()))
    }
}

impl<T: Real> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.dim).collect();
        f.debug_struct("Mat").field("dim", &self.dim).field("rows", &rows).finish()
    }
}

/// Dense symmetric matrix. Entries `(i, j)` and `(j, i)` are bitwise equal.
#[derive(Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Storage<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        Self { dim, data: SmallVec::from_elem(T::zero(), dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, T::one())
    }

    pub fn scalar(dim: usize, value: T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle `i <= j` and mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        let data = m.data.as_mut_slice();
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds from explicit rows, rejecting anything that is not exactly symmetric.
    pub fn try_from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM {
            return domain(format!("matrix dimension {n} outside 1..={MAX_DIM}"));
        }
        if rows.iter().any(|r| r.len() != n) {
            return domain("matrix rows are not square");
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rows[i][j] != rows[j][i] {
                    return domain(format!("entry ({i},{j}) differs from ({j},{i})"));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data.as_slice()[i * self.dim + j]
    }

    /// Full row-major storage, both triangles.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        self.data.as_slice()
    }

    /// Diagonal entries when every off-diagonal entry is exactly zero.
    fn exact_diagonal(&self) -> Option<SmallVec<[T; 8]>> {
        let n = self.dim;
        let d = self.data.as_slice();
        let off_zero = (0..n).all(|i| (i + 1..n).all(|j| d[i * n + j] == T::zero()));
        off_zero.then(|| (0..n).map(|i| d[i * n + i]).collect())
    }

    pub fn to_mat(&self) -> Mat<T> {
        Mat { dim: self.dim, data: self.data.clone() }
    }

    pub fn diagonal(&self) -> SmallVector<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Self { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn add_identity(&self, s: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += s;
        }
        m
    }

    pub fn mul(&self, rhs: &SymMatrix<T>) -> Mat<T> {
        self.to_mat().mul(&rhs.to_mat())
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_product(&self, rhs: &SymMatrix<T>) -> T {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        // both symmetric, so tr(AB) = sum_ij A_ij B_ij
        self.data.iter().zip(&rhs.data).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn mul_vec(&self, x: &[T]) -> SmallVector<T> {
        assert_eq!(x.len(), self.dim);
        let mut out = SmallVector::from_elem(T::zero(), self.dim);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.dim)) {
            *o = row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
        out
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.bilinear(x, x)
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let n = self.dim;
        let mut acc = T::zero();
        for i in 0..n {
            let mut row = T::zero();
            for j in 0..n {
                row += self.data[i * n + j] * y[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// `Q M Qᵀ`.
    pub fn congruence(&self, q: &Mat<T>) -> SymMatrix<T> {
        let n = self.dim;
        assert_eq!(n, q.dim(), "dimension mismatch");
        let (m, qd) = (self.data.as_slice(), q.data.as_slice());
        if let Some(diag) = self.exact_diagonal() {
            return SymMatrix::from_fn(n, |a, b| {
                let (qa, qb) = (&qd[a * n..(a + 1) * n], &qd[b * n..(b + 1) * n]);
                (0..n).fold(T::zero(), |acc, i| acc + qa[i] * diag[i] * qb[i])
            });
        }
        // images[b·n + i] = (M q_b)_i
        let mut images: SmallVec<[T; 64]> = SmallVec::from_elem(T::zero(), n * n);
        for b in 0..n {
            let qb = &qd[b * n..(b + 1) * n];
            for i in 0..n {
                images[b * n + i] = dot(&m[i * n..(i + 1) * n], qb);
            }
        }
        SymMatrix::from_fn(n, |a, b| dot(&qd[a * n..(a + 1) * n], &images[b * n..(b + 1) * n]))
    }

    /// Compression onto a family of vectors: entry `(a, b)` is `basis[a]ᵀ M basis[b]`.
    pub fn compress<V: AsRef<[T]>>(&self, basis: &[V]) -> SymMatrix<T> {
        let n = self.dim;
        let m = self.data.as_slice();
        if let Some(diag) = self.exact_diagonal() {
            return SymMatrix::from_fn(basis.len(), |a, b| {
                let (va, vb) = (basis[a].as_ref(), basis[b].as_ref());
                (0..n).fold(T::zero(), |acc, i| acc + va[i] * diag[i] * vb[i])
            });
        }
        let mut images: SmallVec<[T; 64]> = SmallVec::from_elem(T::zero(), n * n);
        for (b, v) in basis.iter().enumerate() {
            for i in 0..n {
                images[b * n + i] = dot(&m[i * n..(i + 1) * n], v.as_ref());
            }
        }
        SymMatrix::from_fn(basis.len(), |a, b| dot(basis[a].as_ref(), &images[b * n..(b + 1) * n]))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!(self.dim, rhs.dim);
        self.data.iter().zip(&rhs.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Lower Cholesky factor (row-major), or `None` if not positive definite.
    fn cholesky(&self) -> Option<Vec<T>> {
        let n = self.dim;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(l)
    }

    /// True when `M + floor·I` admits a Cholesky factorization, i.e. the smallest
    /// eigenvalue is at least `-floor` (strictly, up to rounding).
    pub fn is_psd_with_floor(&self, floor: T) -> bool {
        self.add_identity(floor).cholesky().is_some()
    }

    /// Solves `M x = b` for positive definite `M`.
    pub fn solve_spd(&self, b: &[T]) -> Result<SmallVector<T>> {
        let n = self.dim;
        let Some(l) = self.cholesky() else {
            return domain("matrix is not positive definite");
        };
        let mut y: SmallVector<T> = SmallVector::from_slice(b);
        for i in 0..n {
            for k in 0..i {
                let v = l[i * n + k] * y[k];
                y[i] -= v;
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = l[k * n + i] * y[k];
                y[i] -= v;
            }
            y[i] /= l[i * n + i];
        }
        Ok(y)
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse_spd(&self) -> Result<SymMatrix<T>> {
        let n = self.dim;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e: SmallVector<T> = SmallVector::from_elem(T::zero(), n);
            e[j] = T::one();
            cols.push(self.solve_spd(&e)?);
        }
        Ok(Mat::from_fn(n, |i, j| cols[j][i]).symmetric_part())
    }
}

impl<T: Real> fmt::Debug for SymMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.dim).collect();
        f.debug_struct("SymMatrix").field("dim", &self.dim).field("rows", &rows).finish()
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
