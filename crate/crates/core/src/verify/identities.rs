//! The identity suite: every algebraic and integral identity the chains rely
//! on, each evaluated once with a pass/fail threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{curvature_integrals, DomainSpec, QuadratureGrid};
use crate::series::{Series, SeriesConfig};
use crate::symfun::{elementary_symmetric_all, newton_tensor, newton_tensor_mixed, SymMatrix};
use crate::transport::{closed_form_potential, newton_divergence, CubicPotential};

use super::{
    ak_recursion_residual, boundary_fields, boundary_term, jk_recursion_residual, l_decomposition_2, l_decomposition_3,
    m_functionals_2, m_functionals_3,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub name: String,
    /// Worst residual; relative unless the name says otherwise.
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl IdentityRow {
    fn new(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOptions {
    pub series: SeriesConfig<f64>,
    /// Points of the uniform grid on `[0, s_max]` for the series facts.
    pub fact_points: usize,
    /// Side of the admissible `(s, φ_n)` grid for the `P` bound.
    pub p_grid: usize,
    /// Random symmetric matrices for the Newton tensor identities.
    pub matrices: usize,
    pub seed: u64,
    /// Quadrature order for the integral identities.
    pub order: usize,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        Self { series: SeriesConfig::default(), fact_points: 1000, p_grid: 500, matrices: 1000, seed: 0, order: 32 }
    }
}

pub const FACT_TOL: f64 = 1e-7;
pub const FACT_E_TOL: f64 = 1e-12;
pub const P_BOUND_TOL: f64 = 1e-9;
pub const NEWTON_TOL: f64 = 1e-10;
pub const DIVERGENCE_TOL: f64 = 1e-6;
pub const RECURSION_TOL: f64 = 1e-5;
pub const DECOMPOSITION_TOL: f64 = 1e-7;

pub fn run_identity_suite(opts: &IdentityOptions) -> Result<Vec<IdentityRow>> {
    let mut rows = series_facts(opts)?;
    rows.extend(newton_identities(opts.matrices, opts.seed)?);
    rows.push(IdentityRow::new("newton_divergence_free", divergence_free_residual(opts.seed)?, DIVERGENCE_TOL));
    rows.extend(integral_identities(opts)?);
    Ok(rows)
}

/// Facts (b)–(e) on a uniform grid of `[0, s_max]` and the `P ≤ −1/4` bound on
/// the admissible grid `0 ≤ φ_n ≤ √(1 − s²)`.
pub fn series_facts(opts: &IdentityOptions) -> Result<Vec<IdentityRow>> {
    let series = Series::new(opts.series)?;
    let s_max = opts.series.s_max;
    let grid = |i: usize, m: usize| if m <= 1 { 0.0 } else { s_max * i as f64 / (m - 1) as f64 };
    let mut worst = [0.0f64; 4];
    for i in 0..opts.fact_points {
        let r = series.residuals(grid(i, opts.fact_points))?;
        for (w, v) in worst.iter_mut().zip([r.r_b, r.r_c, r.r_d, r.r_e]) {
            *w = w.max(v);
        }
    }
    let mut p_max = f64::NEG_INFINITY;
    for i in 0..opts.p_grid {
        let s = grid(i, opts.p_grid);
        let top = (1.0 - s * s).sqrt();
        for j in 0..opts.p_grid {
            let phi_n = if opts.p_grid <= 1 { 0.0 } else { top * j as f64 / (opts.p_grid - 1) as f64 };
            p_max = p_max.max(series.p_pointwise(s, phi_n)?);
        }
    }
    Ok(vec![
        IdentityRow::new("fact_b_derivative_series", worst[0], FACT_TOL),
        IdentityRow::new("fact_c_cubic_relation", worst[1], FACT_TOL),
        IdentityRow::new("fact_d_linear_relation", worst[2], FACT_TOL),
        IdentityRow::new("fact_e_excess_over_quarter", worst[3], FACT_E_TOL),
        IdentityRow::new("p_bound_excess_over_minus_quarter", p_max + 0.25, P_BOUND_TOL),
    ])
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// `(k+1)σ_{k+1}(A) = A : T_k(A)` and `T₂(A, B)` as the polarization of `T₂`,
/// on random symmetric matrices of sizes 2 to 8.
pub fn newton_identities(count: usize, seed: u64) -> Result<Vec<IdentityRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut contraction, mut mixed) = (0.0f64, 0.0f64);
    for trial in 0..count {
        let n = 2 + trial % 7;
        let a = random_sym(&mut rng, n);
        let b = random_sym(&mut rng, n);
        let sig = elementary_symmetric_all(&a);
        for k in 0..n {
            let lhs = (k + 1) as f64 * sig[k + 1];
            let rhs = newton_tensor(&a, k)?.trace_product(&a);
            contraction = contraction.max((lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs())));
        }
        if n >= 3 {
            let t2 = |m: &SymMatrix<f64>| newton_tensor(m, 2);
            let polar = t2(&a.add(&b))?.sub(&t2(&a)?).sub(&t2(&b)?).scale(0.5);
            let m = newton_tensor_mixed(&a, &b)?;
            mixed = mixed.max(m.max_abs_diff(&polar) / (1.0 + polar.max_abs()));
        }
    }
    Ok(vec![
        IdentityRow::new("newton_contraction", contraction, NEWTON_TOL),
        IdentityRow::new("newton_mixed_polarization", mixed, NEWTON_TOL),
    ])
}

/// Convex cubic `½xᵀQx + ⅙c(x,x,x)` with `Q` near `2I` and small `c`; convex
/// on the box `|x_i| ≤ 0.3` used by [`divergence_free_residual`].
pub fn random_convex_cubic(rng: &mut ChaCha8Rng, n: usize) -> Result<CubicPotential> {
    let cubic = (0..n).map(|_| (0..n).map(|_| (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect()).collect()).collect();
    let q = SymMatrix::from_fn(n, |i, j| if i == j { 2.0 } else { 0.0 } + rng.gen_range(-0.2..0.2));
    CubicPotential::new(q, cubic)
}

/// Largest `|Σ_j ∂_j [T_k(∇̄²φ)]_{ij}|` over five random convex cubics in
/// dimensions 2 to 4 and `k = 1, 2`.
pub fn divergence_free_residual(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = 0.0f64;
    for trial in 0..5 {
        let n = 2 + trial % 3;
        let phi = random_convex_cubic(&mut rng, n)?;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        for k in 1..n.min(3) {
            let div = newton_divergence(|y| phi.hessian(y), &x, k, 1e-3)?;
            worst = div.iter().fold(worst, |w, d| w.max(d.abs()));
        }
    }
    Ok(worst)
}

/// Recursions and decompositions on a fixed three- and four-dimensional ellipsoid.
pub fn integral_identities(opts: &IdentityOptions) -> Result<Vec<IdentityRow>> {
    let mut rows = Vec::new();
    for axes in [&[1.0, 1.6, 2.3][..], &[1.0, 1.3, 1.6, 2.0][..]] {
        let spec = DomainSpec::ellipsoid(axes)?;
        let n = spec.dim();
        let p = closed_form_potential(&spec)?;
        let grid = QuadratureGrid::new(&spec, opts.order)?;
        let fields = boundary_fields(&grid, &p)?;
        let ints = curvature_integrals(&spec, opts.order)?;
        let (h, s2) = (ints[1], ints[2]);
        let tag = |name: &str| format!("{name}_n{n}");
        for k in 1..=2 {
            let r = jk_recursion_residual(&fields, k)? / h;
            rows.push(IdentityRow::new(&tag(&format!("j{k}_recursion")), r, RECURSION_TOL));
            let r = ak_recursion_residual(&fields, k)? / s2;
            rows.push(IdentityRow::new(&tag(&format!("a{k}_recursion")), r, RECURSION_TOL));
        }
        let l2 = l_decomposition_2(&fields)?;
        let bt1 = boundary_term(&grid, &p, 1)?;
        rows.push(IdentityRow::new(&tag("l2_sum"), (l2.l21 + l2.l22 - bt1).abs() / h, DECOMPOSITION_TOL));
        let m2 = m_functionals_2(&fields)?;
        rows.push(IdentityRow::new(&tag("m22_identity"), (m2.m22 + m2.t1l_energy - h).abs() / h, DECOMPOSITION_TOL));
        let l3 = l_decomposition_3(&fields, &opts.series)?;
        let bt2 = boundary_term(&grid, &p, 2)?;
        rows.push(IdentityRow::new(&tag("l3_sum"), (l3.l31 + l3.l32 + l3.l33 - bt2).abs() / s2, DECOMPOSITION_TOL));
        let m3 = m_functionals_3(&fields, &opts.series)?;
        let resid = (m3.m31 + m3.m32 + m3.m33 - s2 - m3.e1 - m3.e2 - m3.e3).abs() / s2;
        rows.push(IdentityRow::new(&tag("m3_decomposition"), resid, DECOMPOSITION_TOL));
        let excess = (m3.e1 + m3.e2 + m3.e3 + 0.25 * m3.t2l_energy).max(0.0) / s2;
        rows.push(IdentityRow::new(&tag("e_terms_excess_over_bound"), excess, DECOMPOSITION_TOL));
    }
    Ok(rows)
}
