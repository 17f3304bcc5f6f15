//! Per-node boundary fields of a potential and the pointwise integrands built
//! from them.

use crate::error::{Error, Result};
use crate::geometry::{ricci_from_gauss, BoundarySample, QuadratureGrid};
use crate::series::Series;
use crate::symfun::{
    dot, newton_first, newton_tensor, newton_tensor_mixed, polarization_sigma2, SmallVector, SymMatrix,
};
use crate::transport::Potential;

/// Default allowance for `|∇̄φ| > 1` at a boundary node.
pub const DEFAULT_TOL_MAP: f64 = 1e-9;

/// Tangential/normal split of `φ` at one boundary node. Tangential objects are
/// expressed in the node's orthonormal frame `e_1..e_{n−1}`; `A` and `B` use the
/// frame with the normal last.
#[derive(Debug, Clone)]
pub struct BoundaryFields {
    pub node: usize,
    /// Area element `dμ`.
    pub weight: f64,
    pub normal: SmallVector<f64>,
    /// Second fundamental form `L`.
    pub shape: SymMatrix<f64>,
    /// Ambient gradient `∇̄φ`.
    pub ambient_gradient: SmallVector<f64>,
    /// Ambient Hessian `∇̄²φ` in ambient coordinates.
    pub ambient_hessian: SymMatrix<f64>,
    /// `∇̄²φ` in the frame `(e_1..e_{n−1}, ν)`.
    pub framed_hessian: SymMatrix<f64>,
    /// Tangential gradient `∇φ`.
    pub grad: SmallVector<f64>,
    /// Normal derivative `φ_n`.
    pub phi_n: f64,
    /// `√(1 − |∇φ|²)`.
    pub psi: f64,
    /// Tangential block of the ambient Hessian, `∇̄²_{αβ}φ`.
    pub ambient_tangential: SymMatrix<f64>,
    /// Intrinsic Hessian `φ_{αβ} = ∇̄²_{αβ}φ − L_{αβ}φ_n`.
    pub hess: SymMatrix<f64>,
    /// `∇_α(φ_n) = ∇̄²_{αn}φ + L_{αβ}φ_β`.
    pub grad_phi_n: SmallVector<f64>,
    /// `L∇φ`.
    pub shape_grad: SmallVector<f64>,
}

impl BoundaryFields {
    pub fn new(node: usize, sample: &BoundarySample, p: &Potential, tol_map: f64) -> Result<Self> {
        let n = sample.dim();
        let m = n - 1;
        let x = &sample.position;
        let (g, h) = p.derivatives(x)?;
        let gnorm = dot(&g, &g).sqrt();
        if gnorm > 1.0 + tol_map {
            return Err(Error::InvariantViolation {
                node,
                message: format!("|grad phi| = {gnorm} exceeds 1 + {tol_map:e}"),
            });
        }
        let framed = h.congruence(&sample.frame);
        let l = sample.shape.clone();
        let grad = sample.tangential(&g);
        let phi_n = dot(&sample.normal, &g);
        let psi = (1.0 - dot(&grad, &grad)).max(0.0).sqrt();
        let ambient_tangential = SymMatrix::from_fn(m, |i, j| framed.get(i, j));
        let hess = SymMatrix::from_fn(m, |i, j| ambient_tangential.get(i, j) - l.get(i, j) * phi_n);
        let lg = l.mul_vec(&grad);
        let grad_phi_n: SmallVector<f64> = (0..m).map(|a| framed.get(a, m) + lg[a]).collect();
        Ok(Self {
            node,
            weight: sample.weight,
            normal: sample.normal.clone(),
            shape: l,
            ambient_gradient: g,
            ambient_hessian: h,
            framed_hessian: framed,
            grad,
            phi_n,
            psi,
            ambient_tangential,
            hess,
            grad_phi_n,
            shape_grad: lg,
        })
    }

    pub fn dim(&self) -> usize {
        self.framed_hessian.dim()
    }

    /// Intrinsic part `A` of the framed Hessian: `φ_{αβ}`, `∇_α φ_n` and `∇̄²_{nn}φ`.
    pub fn a(&self) -> SymMatrix<f64> {
        let m = self.dim() - 1;
        SymMatrix::from_fn(m + 1, |i, j| match (i < m, j < m) {
            (true, true) => self.hess.get(i, j),
            (true, false) => self.grad_phi_n[i],
            (false, true) => self.grad_phi_n[j],
            (false, false) => self.framed_hessian.get(m, m),
        })
    }

    /// Curvature part `B`: `L φ_n` and `−L∇φ`.
    pub fn b(&self) -> SymMatrix<f64> {
        let m = self.dim() - 1;
        SymMatrix::from_fn(m + 1, |i, j| match (i < m, j < m) {
            (true, true) => self.shape.get(i, j) * self.phi_n,
            (true, false) => -self.shape_grad[i],
            (false, true) => -self.shape_grad[j],
            (false, false) => 0.0,
        })
    }

    /// `|∇φ|`.
    pub fn grad_norm(&self) -> f64 {
        dot(&self.grad, &self.grad).sqrt()
    }

    /// Tangential Laplacian `Δφ = tr φ_{αβ}`.
    pub fn laplacian(&self) -> f64 {
        self.hess.trace()
    }

    /// `max |(A + B) − ∇̄²φ|` entrywise, in the node frame.
    pub fn frame_split_residual(&self) -> f64 {
        let m = self.dim() - 1;
        let f = &self.framed_hessian;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in i..m {
                let ab = self.hess.get(i, j) + self.shape.get(i, j) * self.phi_n;
                worst = worst.max((ab - f.get(i, j)).abs());
            }
            worst = worst.max((self.grad_phi_n[i] - self.shape_grad[i] - f.get(i, m)).abs());
        }
        worst
    }

    /// `[T_k]_{ij}(∇̄²φ) φ_i ν_j` in ambient coordinates.
    pub fn boundary_integrand(&self, k: usize) -> Result<f64> {
        // T₁ν = σ₁ν − Hν and T₂ν = σ₂ν − σ₁Hν + H²ν
        let h = &self.ambient_hessian;
        let (g, nu) = (&self.ambient_gradient, &self.normal);
        let hn = h.mul_vec(nu);
        let sigma1 = h.trace();
        match k {
            1 => Ok(sigma1 * dot(g, nu) - dot(g, &hn)),
            2 => {
                let sigma2 = 0.5 * (sigma1 * sigma1 - h.trace_product(h));
                Ok(sigma2 * dot(g, nu) - sigma1 * dot(g, &hn) + h.bilinear(g, &hn))
            }
            _ => Ok(newton_tensor(h, k)?.bilinear(g, nu)),
        }
    }

    /// The same contraction in the node frame, `(∇φ, φ_n) · T_k(A + B) e_n`.
    pub fn framed_boundary_integrand(&self, k: usize) -> Result<f64> {
        let n = self.dim();
        let t = newton_tensor(&self.a().add(&self.b()), k)?;
        Ok((0..n - 1).map(|a| self.grad[a] * t.get(a, n - 1)).sum::<f64>() + self.phi_n * t.get(n - 1, n - 1))
    }
}

/// Fields at every node of the grid.
pub fn boundary_fields(grid: &QuadratureGrid, p: &Potential) -> Result<Vec<BoundaryFields>> {
    check_same_domain(grid, p)?;
    grid.samples().enumerate().map(|(i, s)| BoundaryFields::new(i, &s, p, DEFAULT_TOL_MAP)).collect()
}

pub(crate) fn check_same_domain(grid: &QuadratureGrid, p: &Potential) -> Result<()> {
    if grid.spec() != p.spec() {
        return Err(Error::Domain("quadrature grid and potential belong to different domains".into()));
    }
    Ok(())
}

/// Indices into the second-order integrand array.
pub(crate) mod second {
    pub const BOUNDARY: usize = 0;
    pub const L21: usize = 1;
    pub const L22: usize = 2;
    /// `−2 ∇φ·∇(φ_n)`, the integrated-by-parts form of `L21`.
    pub const L21_BY_PARTS: usize = 3;
    pub const M21: usize = 4;
    pub const M22: usize = 5;
    /// `[T₁(L)](∇φ, ∇φ)`.
    pub const T1L: usize = 6;
    pub const MEAN_CURVATURE: usize = 7;
    /// `2Δφ(φ_n − ψ) + H(φ_n² − ψ²)`.
    pub const NORMAL_DEFECT: usize = 8;
    pub const LAPLACIAN: usize = 9;
    /// `J_k = Δφ|∇φ|^{2k}` for k = 1, 2.
    pub const J: [usize; 2] = [10, 11];
    /// `(2k/(2k+1)) [T₁(∇²φ)](∇φ, ∇φ)|∇φ|^{2(k−1)}`.
    pub const J_RHS: [usize; 2] = [12, 13];
    pub const LEN: usize = 14;
}

pub(crate) fn second_order_terms(f: &BoundaryFields) -> Result<[f64; second::LEN]> {
    use second::*;
    let g = &f.grad;
    let (pn, psi) = (f.phi_n, f.psi);
    let h = f.shape.trace();
    let lap = f.laplacian();
    let lgg = f.shape.quadratic_form(g);
    let s2 = dot(g, g);
    // T₁(X)(g, g) = tr(X)|g|² − X(g, g)
    let t1_hess = lap * s2 - f.hess.quadratic_form(g);
    let mut t = [0.0; LEN];
    t[BOUNDARY] = f.boundary_integrand(1)?;
    t[L21] = 2.0 * lap * pn;
    t[L22] = h * pn * pn + lgg;
    t[L21_BY_PARTS] = -2.0 * dot(g, &f.grad_phi_n);
    t[M21] = 2.0 * lap * psi;
    t[M22] = h * psi * psi + lgg;
    t[T1L] = h * s2 - lgg;
    t[MEAN_CURVATURE] = h;
    t[NORMAL_DEFECT] = 2.0 * lap * (pn - psi) + h * (pn * pn - psi * psi);
    t[LAPLACIAN] = lap;
    for k in 1..=2 {
        t[J[k - 1]] = lap * s2.powi(k as i32);
        t[J_RHS[k - 1]] = (2 * k) as f64 / (2 * k + 1) as f64 * t1_hess * s2.powi(k as i32 - 1);
    }
    Ok(t)
}

/// Indices into the third-order integrand array.
pub(crate) mod third {
    pub const BOUNDARY: usize = 0;
    pub const L31: usize = 1;
    pub const L32: usize = 2;
    pub const L33: usize = 3;
    pub const M31: usize = 4;
    /// `M32` as defined, with `ψ²` in place of `φ_n²`.
    pub const M32: usize = 5;
    /// `−2[T₂](∇²φ, L)(∇φ, ∇φ)`, the integrated-by-parts form of `M32`.
    pub const M32_BY_PARTS: usize = 6;
    pub const M33: usize = 7;
    pub const SIGMA2_L: usize = 8;
    /// `[T₂(L)](∇φ, ∇φ)`.
    pub const T2L: usize = 9;
    pub const E1: usize = 10;
    pub const E2: usize = 11;
    pub const E3: usize = 12;
    pub const E11: usize = 13;
    pub const E12: usize = 14;
    pub const E13: usize = 15;
    pub const E21: usize = 16;
    pub const E22: usize = 17;
    /// `[T₂](∇̄²φ|_T, L)(∇φ, ∇φ)`.
    pub const T2_AMBIENT_L: usize = 18;
    /// `[T₂(L)](∇φ, ∇φ) · P` with `P = −3Fφ_n² + 2φ_n − 3G`.
    pub const P_WEIGHTED: usize = 19;
    /// `3σ₂(∇²φ)(φ_n − ψ) + (3/2)Σ₂(∇²φ, L)(φ_n² − ψ²) + σ₂(L)(φ_n³ − ψ³)`.
    pub const NORMAL_DEFECT: usize = 20;
    /// `Σ₂(∇²φ, L)ψ²` and its Codazzi form `2[T₁(L)](∇φ, ∇²φ ∇φ)`.
    pub const CODAZZI_DIRECT: usize = 21;
    pub const CODAZZI_FORM: usize = 22;
    pub const MIXED_TRACE: usize = 23;
    pub const SIGMA2_HESS: usize = 24;
    /// `½ Ric(∇φ, ∇φ)`.
    pub const HALF_RICCI: usize = 25;
    /// `A_k = σ₂(∇²φ)|∇φ|^{2k}` for k = 1, 2 and the recursion right-hand sides.
    pub const A: [usize; 2] = [26, 27];
    pub const A_RHS: [usize; 2] = [28, 29];
    pub const LEN: usize = 30;
}

/// Pointwise third-order integrands plus the smallest eigenvalues of
/// `[T₂](∇̄²φ|_T, L)` and `[T₂](∇̄²φ|_T, ∇̄²φ|_T)`.
pub(crate) fn third_order_terms(f: &BoundaryFields, series: &Series<f64>) -> Result<([f64; third::LEN], [f64; 2])> {
    use third::*;
    let g = &f.grad;
    let (pn, psi) = (f.phi_n, f.psi);
    let s = f.grad_norm();
    let s2 = s * s;
    let l = &f.shape;
    let phi = &f.hess;
    let ht = &f.ambient_tangential;
    let (ff, gg) = (series.f(s)?, series.g(s)?);
    let ric = ricci_from_gauss(l).quadratic_form(g);
    let sigma2 = |m: &SymMatrix<f64>| -> Result<f64> { Ok(0.5 * polarization_sigma2(m, m)?) };
    let sigma2_phi = sigma2(phi)?;
    let sigma2_l = sigma2(l)?;
    let mixed = polarization_sigma2(phi, l)?;
    let lg = l.mul_vec(g);
    let t1_phi_l = dot(&newton_first(phi).mul_vec(g), &lg);
    let t1_l_l = dot(&newton_first(l).mul_vec(g), &lg);
    let t2_phi_l = newton_tensor_mixed(phi, l)?.quadratic_form(g);
    let t2_phi_phi = newton_tensor_mixed(phi, phi)?.quadratic_form(g);
    let t2_l = newton_tensor_mixed(l, l)?;
    let t2l = t2_l.quadratic_form(g);
    let t2_ht_l = newton_tensor_mixed(ht, l)?;
    let t2_ht_ht = newton_tensor_mixed(ht, ht)?;
    let (t2_ht_l_g, t2_ht_ht_g) = (t2_ht_l.quadratic_form(g), t2_ht_ht.quadratic_form(g));

    let mut t = [0.0; LEN];
    t[BOUNDARY] = f.boundary_integrand(2)?;
    t[L31] = (3.0 * sigma2_phi - ric) * pn;
    t[L32] = 1.5 * mixed * pn * pn + t1_phi_l;
    t[L33] = sigma2_l * pn.powi(3) + t1_l_l * pn;
    t[M31] = (3.0 * sigma2_phi - ric) * psi;
    t[M32] = 1.5 * mixed * psi * psi + t1_phi_l;
    t[M32_BY_PARTS] = -2.0 * t2_phi_l;
    t[M33] = sigma2_l * psi.powi(3) + t1_l_l * psi;
    t[SIGMA2_L] = sigma2_l;
    t[T2L] = t2l;
    t[E1] = -3.0 * t2_phi_phi * ff;
    t[E2] = -2.0 * t2_phi_l;
    t[E3] = -3.0 * t2l * gg;
    t[E11] = -3.0 * t2_ht_ht_g * ff;
    t[E12] = 6.0 * t2_ht_l_g * pn * ff;
    t[E13] = -3.0 * t2l * pn * pn * ff;
    t[E21] = -2.0 * t2_ht_l_g;
    t[E22] = 2.0 * t2l * pn;
    t[T2_AMBIENT_L] = t2_ht_l_g;
    t[P_WEIGHTED] = t2l * (-3.0 * ff * pn * pn + 2.0 * pn - 3.0 * gg);
    t[NORMAL_DEFECT] =
        3.0 * sigma2_phi * (pn - psi) + 1.5 * mixed * (pn * pn - psi * psi) + sigma2_l * (pn.powi(3) - psi.powi(3));
    t[CODAZZI_DIRECT] = mixed * psi * psi;
    t[CODAZZI_FORM] = 2.0 * dot(&newton_first(l).mul_vec(g), &phi.mul_vec(g));
    t[MIXED_TRACE] = mixed;
    t[SIGMA2_HESS] = sigma2_phi;
    t[HALF_RICCI] = 0.5 * ric;
    for k in 1..=2 {
        let kf = k as f64;
        t[A[k - 1]] = sigma2_phi * s2.powi(k as i32);
        t[A_RHS[k - 1]] =
            kf / (kf + 1.0) * t2_phi_phi * s2.powi(k as i32 - 1) + ric * s2.powi(k as i32) / (2.0 * (kf + 1.0));
    }
    Ok((t, [t2_ht_l.min_eigenvalue(), t2_ht_ht.min_eigenvalue()]))
}
