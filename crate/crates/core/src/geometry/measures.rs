//! Volumes, curvature integrals and quermassintegrals.
//!
//! With `ω_k` the volume of the unit `k`-ball, the Steiner expansion reads
//! `Vol(Ω + tB) = Σ_k binom(n, k) W_k t^k` and the normalized quermassintegrals
//! are `V_k = (ω_k/ω_n) W_{n−k}`, so that `V_0 = 1` and `V_n = Vol(Ω)`.
//! For `1 <= j <= n` the boundary formula is
//! `W_j = ∫ σ_{j−1}(L) dμ / (n · binom(n−1, j−1))`.

use crate::error::{domain, Result};
use crate::geometry::domain::DomainSpec;
use crate::geometry::quadrature::boundary_quadrature;
use crate::symfun::{elementary_symmetric_of, newton_first, SymMatrix};

/// `ω_k = π^{k/2}/Γ(k/2 + 1)` for `k >= 1`.
pub fn unit_ball_volume(k: usize) -> Result<f64> {
    if k == 0 {
        return domain("unit ball volume needs dimension k >= 1");
    }
    Ok(omega(k))
}

/// `ω_k` including `ω_0 = 1`, via `ω_k = (2π/k) ω_{k−2}`.
pub(crate) fn omega(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * omega(k - 2),
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn volume(spec: &DomainSpec, order: usize) -> Result<f64> {
    Ok(boundary_quadrature(spec, order)?.volume())
}

pub fn surface_area(spec: &DomainSpec, order: usize) -> Result<f64> {
    Ok(boundary_quadrature(spec, order)?.area())
}

/// `∫ σ_k(L) dμ` for `k = 0..=n−1` in one pass.
pub fn curvature_integrals(spec: &DomainSpec, order: usize) -> Result<Vec<f64>> {
    let grid = boundary_quadrature(spec, order)?;
    let n = spec.dim();
    let mut acc: Vec<crate::sum::PairwiseAccumulator> = (0..n).map(|_| Default::default()).collect();
    for s in grid.samples() {
        let kappa = s.shape.eigenvalues();
        let sig = elementary_symmetric_of(&kappa);
        for (a, v) in acc.iter_mut().zip(sig) {
            a.add(s.weight * v);
        }
    }
    Ok(acc.into_iter().map(|a| a.total()).collect())
}

/// Steiner coefficients `W_0..=W_n` from boundary integrals.
pub fn steiner_coefficients(spec: &DomainSpec, order: usize) -> Result<Vec<f64>> {
    let n = spec.dim();
    let grid = boundary_quadrature(spec, order)?;
    let ints = curvature_integrals(spec, order)?;
    let mut w = Vec::with_capacity(n + 1);
    w.push(grid.volume());
    for j in 1..=n {
        w.push(ints[j - 1] / (n as f64 * binomial(n - 1, j - 1)));
    }
    Ok(w)
}

/// Normalized quermassintegral `V_k(Ω)` for `0 <= k <= n`: `V_0 = 1`,
/// `V_n = Vol(Ω)` and, for `0 < k < n`,
/// `V_k = (k!(n−k−1)!/n!) (ω_k/ω_n) ∫ σ_{n−k−1}(L) dμ`.
pub fn quermassintegral(spec: &DomainSpec, k: usize, order: usize) -> Result<f64> {
    let n = spec.dim();
    if k > n {
        return domain(format!("quermassintegral index {k} outside 0..={n}"));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k == n {
        return volume(spec, order);
    }
    let ints = curvature_integrals(spec, order)?;
    Ok(quermass_from_integrals(n, k, &ints))
}

/// `V_k` for `0 < k < n` from precomputed `∫ σ_j(L)`.
pub fn quermass_from_integrals(n: usize, k: usize, integrals: &[f64]) -> f64 {
    let j = n - k - 1;
    omega(k) / omega(n) * integrals[j] / (n as f64 * binomial(n - 1, j))
}

/// Ricci curvature of the boundary from the Gauss equation, `½(T₁(L)L + L T₁(L))`.
pub fn ricci_from_gauss(l: &SymMatrix<f64>) -> SymMatrix<f64> {
    newton_first(l).mul(l).symmetric_part()
}
