//! Product quadrature on the sphere and the boundary samples built from it.
//!
//! Directions use nested polar angles with the last coordinate as the pole:
//! `u = (sin θ · u', cos θ)` with `u' ∈ S^{d−2}`, ending in `(cos φ, sin φ)` on
//! the circle. Each polar angle uses Gauss–Legendre in `θ ∈ [0, π]` with the
//! Jacobian `sin^{d−2} θ` folded into the weight; the azimuth uses the trapezoid
//! rule. Working in `θ` rather than `cos θ` clusters nodes at the poles, which
//! matters for elongated domains whose curvature concentrates there.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::domain::{DomainSpec, Family};
use crate::sum::PairwiseAccumulator;
use crate::symfun::{dot, norm, Mat, SmallVector, SymMatrix};

pub const MIN_ORDER: usize = 4;
pub const MAX_ORDER: usize = 1024;

/// `(C_m^λ(x), d/dx C_m^λ(x))` by the three-term recurrence.
fn gegenbauer(m: usize, lambda: f64, x: f64) -> (f64, f64) {
    if m == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, 2.0 * lambda * x);
    for k in 2..=m {
        let kf = k as f64;
        let p2 = (2.0 * x * (kf + lambda - 1.0) * p1 - (kf + 2.0 * lambda - 2.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    let d = (-mf * x * p1 + (mf + 2.0 * lambda - 1.0) * p0) / (1.0 - x * x);
    (p1, d)
}

/// Gauss–Gegenbauer rule for `∫_{−1}^{1} f(x) (1 − x²)^{λ − 1/2} dx`, nodes ascending.
/// `total` is the exact integral of the weight, used to fix the normalization.
///
/// Roots are bracketed on a θ-grid finer than their spacing `≈ π/(m + λ)`, then
/// bisected and polished by one Newton step.
pub fn gauss_gegenbauer(m: usize, lambda: f64, total: f64) -> Vec<(f64, f64)> {
    let p = |theta: f64| gegenbauer(m, lambda, theta.cos()).0;
    let steps = 4 * (m + 3);
    let mut roots = Vec::with_capacity(m);
    let mut prev_t = 0.0;
    let mut prev_v = p(prev_t);
    for i in 1..=steps {
        let t = PI * i as f64 / steps as f64;
        let v = p(t);
        if v == 0.0 || (v < 0.0) != (prev_v < 0.0) {
            let (mut lo, mut hi, mut flo) = (prev_t, t, prev_v);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                let fm = p(mid);
                if (fm < 0.0) == (flo < 0.0) && fm != 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_v = v;
    }
    assert_eq!(roots.len(), m, "Gegenbauer root bracketing failed");
    let mut rule: Vec<(f64, f64)> = roots
        .into_iter()
        .map(|theta| {
            let mut x = theta.cos();
            let (v, d) = gegenbauer(m, lambda, x);
            x -= v / d;
            let (_, d) = gegenbauer(m, lambda, x);
            (x, 1.0 / ((1.0 - x * x) * d * d))
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = total / rule.iter().map(|r| r.1).sum::<f64>();
    rule.iter_mut().for_each(|r| r.1 *= scale);
    rule
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    gauss_gegenbauer(m, 0.5, 2.0)
}

/// Product rule on `S^{n−1}` of a given order.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dim: usize,
    /// `(cos θ, sin θ, weight)` of the Gauss–Legendre rule in `θ ∈ [0, π]`.
    polar: Vec<(f64, f64, f64)>,
    azimuth: usize,
}

impl SphereRule {
    /// `⌊order/2⌋ + 1` polar nodes per level and twice as many azimuth nodes.
    pub fn new(dim: usize, order: usize) -> Self {
        let m = order / 2 + 1;
        let polar = gauss_legendre(m)
            .into_iter()
            .map(|(x, w)| {
                let theta = 0.5 * PI * (x + 1.0);
                (theta.cos(), theta.sin(), 0.5 * PI * w)
            })
            .collect();
        Self { dim, polar, azimuth: 2 * m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.azimuth * self.polar.len().pow(self.dim as u32 - 2)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Direction and surface weight of node `index`; the azimuth varies fastest.
    pub fn node(&self, index: usize) -> (SmallVector<f64>, f64) {
        let a = index % self.azimuth;
        let mut rest = index / self.azimuth;
        let phi = 2.0 * PI * a as f64 / self.azimuth as f64;
        let mut u: SmallVector<f64> = SmallVector::with_capacity(self.dim);
        u.push(phi.cos());
        u.push(phi.sin());
        let mut w = 2.0 * PI / self.azimuth as f64;
        let m = self.polar.len();
        for d in 3..=self.dim {
            let (c, s, wt) = self.polar[rest % m];
            rest /= m;
            for v in u.iter_mut() {
                *v *= s;
            }
            u.push(c);
            w *= wt * s.powi(d as i32 - 2);
        }
        (u, w)
    }
}

/// One boundary node with its local geometry.
#[derive(Debug, Clone)]
pub struct BoundarySample {
    /// Point of the unit sphere that parametrizes the node.
    pub direction: SmallVector<f64>,
    pub position: SmallVector<f64>,
    pub normal: SmallVector<f64>,
    /// Orthonormal rows: tangents `e_1..e_{n−1}` followed by the normal.
    pub frame: Mat<f64>,
    /// Second fundamental form in the tangent frame.
    pub shape: SymMatrix<f64>,
    /// Area element `dμ` at the node.
    pub weight: f64,
}

impl BoundarySample {
    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn tangent(&self, alpha: usize) -> &[f64] {
        debug_assert!(alpha + 1 < self.dim());
        self.frame.row(alpha)
    }

    pub fn tangents(&self) -> Vec<&[f64]> {
        (0..self.dim() - 1).map(|a| self.frame.row(a)).collect()
    }

    /// Mean curvature `H = tr L`.
    pub fn mean_curvature(&self) -> f64 {
        self.shape.trace()
    }

    /// Tangential components `Eᵀ v`.
    pub fn tangential(&self, v: &[f64]) -> SmallVector<f64> {
        (0..self.dim() - 1).map(|a| dot(self.frame.row(a), v)).collect()
    }

    /// Restriction `Eᵀ M E` of an ambient symmetric matrix to the tangent space.
    pub fn restrict(&self, m: &SymMatrix<f64>) -> SymMatrix<f64> {
        m.compress(&self.tangents())
    }
}

/// Orthonormal frame whose last row is `nu`, via a Householder reflection.
pub fn frame_with_normal(nu: &[f64]) -> Mat<f64> {
    let n = nu.len();
    let s = if nu[n - 1] >= 0.0 { 1.0 } else { -1.0 };
    let mut w: SmallVector<f64> = nu.iter().copied().collect();
    w[n - 1] += s;
    let c = 2.0 / dot(&w, &w);
    let mut frame = Mat::identity(n);
    for i in 0..n - 1 {
        let ci = c * w[i];
        for (f, wj) in frame.row_mut(i).iter_mut().zip(&w) {
            *f -= ci * wj;
        }
    }
    frame.row_mut(n - 1).copy_from_slice(nu);
    frame
}

/// Boundary geometry at the point parametrized by the unit vector `u`. The
/// weight is the area element per unit solid angle.
pub fn boundary_point(spec: &DomainSpec, direction: &[f64]) -> BoundarySample {
    let r = norm(direction);
    boundary_sample(spec, direction.iter().map(|v| v / r).collect(), 1.0)
}

/// Ellipsoids use the affine chart `x = a∘u`, with area element
/// `Π a_i · |u/a| dσ`; the other families use the radial chart `x = ρ(u)u`, with
/// `ρ^{n−1} |∇F| / (∇F·u) dσ`. The affine chart keeps tips of long axes from
/// being squeezed into a small solid angle.
fn boundary_sample(spec: &DomainSpec, u: SmallVector<f64>, dsigma: f64) -> BoundarySample {
    let n = u.len();
    let (x, affine_jacobian) = match spec.family() {
        Family::Ellipsoid { axes } => {
            let x: SmallVector<f64> = u.iter().zip(axes).map(|(v, a)| a * v).collect();
            let scaled: f64 = u.iter().zip(axes).map(|(v, a)| (v / a) * (v / a)).sum();
            (x, Some(axes.iter().product::<f64>() * scaled.sqrt()))
        }
        _ => {
            let rho = spec.radial(&u);
            (u.iter().map(|v| rho * v).collect(), None)
        }
    };
    let f = spec.implicit(&x);
    let gnorm = norm(&f.gradient);
    let nu: SmallVector<f64> = f.gradient.iter().map(|g| g / gnorm).collect();
    let frame = frame_with_normal(&nu);
    let tangents: Vec<&[f64]> = (0..n - 1).map(|a| frame.row(a)).collect();
    let shape = f.hessian.compress(&tangents).scale(1.0 / gnorm);
    let weight = dsigma * affine_jacobian.unwrap_or_else(|| norm(&x).powi(n as i32 - 1) * gnorm / dot(&f.gradient, &u));
    BoundarySample { direction: u, position: x, normal: nu, frame, shape, weight }
}

/// Boundary quadrature for a domain. Samples are generated on demand, so even
/// large grids in dimension six need no node storage.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    spec: DomainSpec,
    order: usize,
    rule: SphereRule,
    /// Ambient coordinate of each rule coordinate. Ellipsoid axes are placed in
    /// ascending order so the longest axis runs along the outermost polar angle.
    axis_order: Option<SmallVector<usize>>,
}

pub fn boundary_quadrature(spec: &DomainSpec, order: usize) -> Result<QuadratureGrid> {
    QuadratureGrid::new(spec, order)
}

impl QuadratureGrid {
    pub fn new(spec: &DomainSpec, order: usize) -> Result<Self> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
            return Err(Error::Domain(format!("quadrature order {order} outside {MIN_ORDER}..={MAX_ORDER}")));
        }
        let rule = SphereRule::new(spec.dim(), order);
        if let Family::RadialGraph(rho) = spec.family() {
            for i in 0..rule.len() {
                let (u, _) = rule.node(i);
                let r = rho.value(&u);
                if !(r > 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "radial function is {r:e} <= 0 at direction {:?}",
                        u.as_slice()
                    )));
                }
            }
        }
        let axis_order = match spec.family() {
            Family::Ellipsoid { axes } => {
                let mut perm: SmallVector<usize> = (0..axes.len()).collect();
                perm.sort_by(|&i, &j| axes[i].total_cmp(&axes[j]));
                Some(perm)
            }
            _ => None,
        };
        Ok(Self { spec: spec.clone(), order, rule, axis_order })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn sample(&self, index: usize) -> BoundarySample {
        let (mut u, dsigma) = self.rule.node(index);
        if let Some(perm) = &self.axis_order {
            let mut v = u.clone();
            for (i, &p) in perm.iter().enumerate() {
                v[p] = u[i];
            }
            u = v;
        }
        boundary_sample(&self.spec, u, dsigma)
    }

    pub fn samples(&self) -> impl Iterator<Item = BoundarySample> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    /// `∫_{∂Ω} f dμ` with deterministic pairwise summation in node order.
    pub fn integrate(&self, mut f: impl FnMut(&BoundarySample) -> f64) -> f64 {
        let mut acc = PairwiseAccumulator::new();
        for s in self.samples() {
            acc.add(s.weight * f(&s));
        }
        acc.total()
    }

    /// Several integrals in one pass over the nodes.
    pub fn integrate_many<const K: usize>(&self, mut f: impl FnMut(&BoundarySample) -> [f64; K]) -> [f64; K] {
        let mut acc: [PairwiseAccumulator; K] = std::array::from_fn(|_| PairwiseAccumulator::new());
        for s in self.samples() {
            let v = f(&s);
            for (a, x) in acc.iter_mut().zip(v) {
                a.add(s.weight * x);
            }
        }
        acc.map(|a| a.total())
    }

    /// `∫ 1 dμ`.
    pub fn area(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// `(1/n) ∫ x·ν dμ`.
    pub fn volume(&self) -> f64 {
        let n = self.dim() as f64;
        self.integrate(|s| dot(&s.position, &s.normal)) / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(7);
        for p in 0..14 {
            let approx: f64 = rule.iter().map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((approx - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn gegenbauer_rule_is_exact_for_polynomials() {
        // weight (1 − x²) has total mass 4/3; ∫x²(1 − x²) = 4/15, ∫x⁴(1 − x²) = 4/35
        let rule = gauss_gegenbauer(4, 1.5, 4.0 / 3.0);
        let moment = |p: i32| rule.iter().map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((moment(2) - 4.0 / 15.0).abs() < 1e-15);
        assert!((moment(4) - 4.0 / 35.0).abs() < 1e-15);
        assert!(moment(7).abs() < 1e-15);
    }

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        let areas = [2.0 * PI, 4.0 * PI, 2.0 * PI * PI, 8.0 * PI * PI / 3.0, PI.powi(3)];
        for (d, exact) in (2..=6).zip(areas) {
            let rule = SphereRule::new(d, 30);
            let total: f64 = (0..rule.len()).map(|i| rule.node(i).1).sum();
            assert!((total - exact).abs() < 1e-12 * exact, "dimension {d}: {total} vs {exact}");
            let (u, _) = rule.node(rule.len() / 3);
            assert!((norm(&u) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        for nu in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.6, 0.0, 0.8], [0.48, -0.6, -0.64]] {
            let f = frame_with_normal(&nu);
            assert!(f.orthogonality_defect() < 1e-15);
            assert_eq!(f.row(2), &nu);
        }
    }

    #[test]
    fn rejects_low_order() {
        let spec = DomainSpec::ball(3, 1.0).unwrap();
        assert!(boundary_quadrature(&spec, 3).is_err());
        assert!(boundary_quadrature(&spec, 4).is_ok());
    }
}
