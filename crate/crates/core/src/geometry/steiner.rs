//! Monte-Carlo estimates of parallel-body volumes `Vol(Ω + tB)` and least-squares
//! recovery of the Steiner coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::domain::{DomainSpec, Family, RadialFunction};
use crate::geometry::measures::binomial;
use crate::geometry::quadrature::frame_with_normal;
use crate::symfun::{dot, norm, SmallVector, SymMatrix};

const PROJECTION_TOL: f64 = 1e-12;
const MAX_PROJECTION_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinerEstimate {
    pub t: f64,
    pub volume: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerFit {
    /// `Ŵ_0..=Ŵ_n`.
    pub coefficients: Vec<f64>,
    /// Standard error of each coefficient, propagated from the volume estimates.
    pub stderr: Vec<f64>,
    pub estimates: Vec<SteinerEstimate>,
}

/// Euclidean distance from `x` to a convex domain (zero inside).
pub fn distance_to_convex(spec: &DomainSpec, x: &[f64]) -> Result<f64> {
    if !spec.is_known_convex() {
        return Err(Error::UnsupportedDomain(
            "parallel-body volumes need a convex domain (ball, ellipsoid or certified radial graph)".into(),
        ));
    }
    if spec.contains(x) {
        return Ok(0.0);
    }
    Ok(match spec.family() {
        Family::Ball { radius } => norm(x) - radius,
        Family::Ellipsoid { axes } => ellipsoid_distance(axes, x),
        Family::RadialGraph(rho) => radial_distance(rho, x),
    })
}

/// Projection onto `Σ p_i²/a_i² = 1` for exterior `x`: `p_i = a_i² x_i/(a_i² + λ)`
/// where `λ > 0` solves `g(λ) = Σ a_i² x_i²/(a_i² + λ)² − 1 = 0`. `g` is convex and
/// decreasing, so Newton from the left of the root converges monotonically.
fn ellipsoid_distance(axes: &[f64], x: &[f64]) -> f64 {
    let mut lambda = 0.0f64;
    for _ in 0..MAX_PROJECTION_ITERS {
        let (mut g, mut dg) = (-1.0, 0.0);
        for (a, v) in axes.iter().zip(x) {
            let a2 = a * a;
            let d = a2 + lambda;
            g += a2 * v * v / (d * d);
            dg -= 2.0 * a2 * v * v / (d * d * d);
        }
        let step = g / dg;
        lambda -= step;
        if step.abs() <= PROJECTION_TOL * (1.0 + lambda) {
            break;
        }
    }
    axes.iter()
        .zip(x)
        .map(|(a, v)| {
            let a2 = a * a;
            let p = a2 * v / (a2 + lambda);
            (v - p) * (v - p)
        })
        .sum::<f64>()
        .sqrt()
}

/// Nearest boundary point `ρ(u)u` by Gauss–Newton over unit directions `u`,
/// starting from the radial direction of `x`, with step halving to keep the
/// distance non-increasing.
fn radial_distance(rho: &RadialFunction, x: &[f64]) -> f64 {
    let n = x.len();
    let r = norm(x);
    let mut u: SmallVector<f64> = x.iter().map(|v| v / r).collect();
    let residual = |u: &[f64]| -> SmallVector<f64> {
        let p = rho.value(u);
        u.iter().zip(x).map(|(ui, xi)| p * ui - xi).collect()
    };
    let mut res = residual(&u);
    let mut f = dot(&res, &res);
    for _ in 0..MAX_PROJECTION_ITERS {
        let frame = frame_with_normal(&u);
        let g = rho.gradient(&u);
        let p = rho.value(&u);
        // columns of the Jacobian: d(ρu)/de_a = (g·e_a) u + ρ e_a
        let cols: Vec<SmallVector<f64>> = (0..n - 1)
            .map(|a| {
                let e = frame.row(a);
                let ge = dot(&g, e);
                (0..n).map(|i| ge * u[i] + p * e[i]).collect()
            })
            .collect();
        let jtj = SymMatrix::from_fn(n - 1, |a, b| dot(&cols[a], &cols[b]));
        let jtr: SmallVector<f64> = cols.iter().map(|c| -dot(c, &res)).collect();
        let Ok(delta) = jtj.solve_spd(&jtr) else { break };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut v: SmallVector<f64> = u.clone();
            for a in 0..n - 1 {
                for (vi, ei) in v.iter_mut().zip(frame.row(a)) {
                    *vi += scale * delta[a] * ei;
                }
            }
            let nv = norm(&v);
            v.iter_mut().for_each(|c| *c /= nv);
            let trial = residual(&v);
            let ft = dot(&trial, &trial);
            if ft <= f {
                u = v;
                res = trial;
                f = ft;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || scale * norm(&delta) < PROJECTION_TOL {
            break;
        }
    }
    f.sqrt()
}

/// Monte-Carlo estimate of `Vol{x : dist(x, Ω) <= t}` from uniform samples in a
/// bounding cube. The generator stream is keyed by `(seed, t)`.
pub fn steiner_volume(spec: &DomainSpec, t: f64, n_samples: usize, seed: u64) -> Result<SteinerEstimate> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("parallel distance t = {t} must be non-negative"));
    }
    if n_samples == 0 {
        return domain("need at least one Monte-Carlo sample");
    }
    // fail early on non-convex input
    distance_to_convex(spec, &vec![0.0; spec.dim()])?;
    let n = spec.dim();
    let half = spec.bounding_radius() + t;
    let box_volume = (2.0 * half).powi(n as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t.to_bits());
    let mut x = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..n_samples {
        for c in x.iter_mut() {
            *c = rng.gen_range(-half..half);
        }
        if distance_to_convex(spec, &x)? <= t {
            hits += 1;
        }
    }
    let p = hits as f64 / n_samples as f64;
    Ok(SteinerEstimate {
        t,
        volume: p * box_volume,
        stderr: (p * (1.0 - p) / n_samples as f64).sqrt() * box_volume,
        n_samples,
    })
}

/// Weighted least-squares fit of `Σ_k binom(n, k) W_k t^k` to parallel-body volumes.
pub fn steiner_fit(spec: &DomainSpec, t_values: &[f64], n_samples: usize, seed: u64) -> Result<SteinerFit> {
    let n = spec.dim();
    let mut distinct = t_values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < n + 1 {
        return domain(format!(
            "fitting a degree-{n} Steiner polynomial needs at least {} distinct t values, got {}",
            n + 1,
            distinct.len()
        ));
    }
    let estimates = t_values.iter().map(|&t| steiner_volume(spec, t, n_samples, seed)).collect::<Result<Vec<_>>>()?;
    // floor the weights so a degenerate all-hit or no-hit estimate stays usable
    let floor = estimates.iter().map(|e| e.stderr).fold(0.0, f64::max).max(f64::MIN_POSITIVE) * 1e-3;
    let rows: Vec<Vec<f64>> =
        t_values.iter().map(|&t| (0..=n).map(|k| binomial(n, k) * t.powi(k as i32)).collect()).collect();
    let weights: Vec<f64> = estimates.iter().map(|e| 1.0 / e.stderr.max(floor).powi(2)).collect();
    let normal = SymMatrix::from_fn(n + 1, |a, b| rows.iter().zip(&weights).map(|(r, w)| w * r[a] * r[b]).sum());
    let rhs: Vec<f64> = (0..=n)
        .map(|a| rows.iter().zip(&weights).zip(&estimates).map(|((r, w), e)| w * r[a] * e.volume).sum())
        .collect();
    let coefficients = normal.solve_spd(&rhs)?.to_vec();
    let cov = normal.inverse_spd()?;
    let stderr = (0..=n).map(|k| cov.get(k, k).max(0.0).sqrt()).collect();
    Ok(SteinerFit { coefficients, stderr, estimates })
}
