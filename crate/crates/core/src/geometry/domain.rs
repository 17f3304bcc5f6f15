//! Analytic domain families with closed-form implicit functions.
//!
//! JSON layout (one document per domain):
//!
//! ```json
//! {"family": "ball", "dim": 3, "params": {"radius": 1.0}}
//! {"family": "ellipsoid", "dim": 3, "params": {"axes": [1.0, 1.0, 2.0]}}
//! {"family": "radial_graph", "dim": 3,
//!  "params": {"base": 1.0, "terms": [{"coeff": 0.03, "powers": [0, 0, 1]}]},
//!  "convexity_certificate": true}
//! ```
//!
//! A radial graph is `{ r u : 0 <= r <= ρ(u), u ∈ S^{n−1} }` with
//! `ρ(u) = base + Σ coeff · Π u_i^{powers_i}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::symfun::{dot, norm, SmallVector, SymMatrix};

pub const MIN_DIM: usize = 2;
pub const MAX_DOMAIN_DIM: usize = 6;

/// One monomial `coeff · Π u_i^{powers_i}` of a radial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Polynomial in the coordinates of the unit vector, evaluated on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub base: f64,
    #[serde(default)]
    pub terms: Vec<Monomial>,
}

impl RadialFunction {
    pub fn constant(base: f64) -> Self {
        Self { base, terms: Vec::new() }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        self.base
            + self
                .terms
                .iter()
                .map(|t| t.coeff * t.powers.iter().zip(u).map(|(&p, &x)| x.powi(p as i32)).product::<f64>())
                .sum::<f64>()
    }

    /// Euclidean gradient of the polynomial at `u`.
    pub fn gradient(&self, u: &[f64]) -> SmallVector<f64> {
        let n = u.len();
        let mut g: SmallVector<f64> = SmallVector::from_elem(0.0, n);
        for t in &self.terms {
            for i in 0..n {
                if t.powers[i] == 0 {
                    continue;
                }
                let mut v = t.coeff * t.powers[i] as f64;
                for (j, (&p, &x)) in t.powers.iter().zip(u).enumerate() {
                    let e = if j == i { p - 1 } else { p };
                    v *= x.powi(e as i32);
                }
                g[i] += v;
            }
        }
        g
    }

    /// Euclidean Hessian of the polynomial at `u`.
    pub fn hessian(&self, u: &[f64]) -> SymMatrix<f64> {
        let n = u.len();
        SymMatrix::from_fn(n, |i, k| {
            let mut acc = 0.0;
            for t in &self.terms {
                let (pi, pk) = (t.powers[i], t.powers[k]);
                let factor = if i == k { (pi as f64) * (pi as f64 - 1.0) } else { pi as f64 * pk as f64 };
                if factor == 0.0 {
                    continue;
                }
                let mut v = t.coeff * factor;
                for (j, (&p, &x)) in t.powers.iter().zip(u).enumerate() {
                    let mut e = p as i32;
                    if j == i {
                        e -= 1;
                    }
                    if j == k {
                        e -= 1;
                    }
                    v *= x.powi(e);
                }
                acc += v;
            }
            acc
        })
    }

    /// Crude upper bound of `|ρ|` on the sphere (each monomial is bounded by one).
    pub fn sup_bound(&self) -> f64 {
        self.base.abs() + self.terms.iter().map(|t| t.coeff.abs()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Ball { radius: f64 },
    Ellipsoid { axes: Vec<f64> },
    RadialGraph(RadialFunction),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ball { .. } => "ball",
            Family::Ellipsoid { .. } => "ellipsoid",
            Family::RadialGraph(_) => "radial_graph",
        }
    }
}

/// Bounded smooth star-shaped domain `Ω ⊂ ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainDocument", into = "DomainDocument")]
pub struct DomainSpec {
    dim: usize,
    family: Family,
    convexity_certificate: Option<bool>,
}

/// Implicit function `F` with `Ω = {F <= 0}` and derivatives at a point.
#[derive(Debug, Clone)]
pub struct ImplicitEval {
    pub value: f64,
    pub gradient: SmallVector<f64>,
    pub hessian: SymMatrix<f64>,
}

impl DomainSpec {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, Family::Ball { radius }, None)
    }

    pub fn ellipsoid(axes: &[f64]) -> Result<Self> {
        Self::new(axes.len(), Family::Ellipsoid { axes: axes.to_vec() }, None)
    }

    pub fn radial_graph(dim: usize, rho: RadialFunction, convexity_certificate: Option<bool>) -> Result<Self> {
        Self::new(dim, Family::RadialGraph(rho), convexity_certificate)
    }

    /// `ρ(u) = 1 + ε · amplitude · u_n`, the unit sphere perturbed by its first zonal harmonic.
    pub fn perturbed_sphere(dim: usize, eps: f64, amplitude: f64) -> Result<Self> {
        let mut powers = vec![0; dim];
        powers[dim - 1] = 1;
        let rho = RadialFunction { base: 1.0, terms: vec![Monomial { coeff: eps * amplitude, powers }] };
        Self::radial_graph(dim, rho, None)
    }

    pub fn new(dim: usize, family: Family, convexity_certificate: Option<bool>) -> Result<Self> {
        let spec = Self { dim, family, convexity_certificate };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        if !(MIN_DIM..=MAX_DOMAIN_DIM).contains(&n) {
            return Err(Error::InvalidDomain(format!("dimension {n} outside {MIN_DIM}..={MAX_DOMAIN_DIM}")));
        }
        match &self.family {
            Family::Ball { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("ball radius {radius} must be positive")));
                }
            }
            Family::Ellipsoid { axes } => {
                if axes.len() != n {
                    return Err(Error::InvalidDomain(format!(
                        "ellipsoid in dimension {n} needs {n} semi-axes, got {}",
                        axes.len()
                    )));
                }
                if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::InvalidDomain("ellipsoid semi-axes must be positive".into()));
                }
            }
            Family::RadialGraph(rho) => {
                if !rho.base.is_finite() || rho.terms.iter().any(|t| !t.coeff.is_finite()) {
                    return Err(Error::InvalidDomain("radial function coefficients must be finite".into()));
                }
                if let Some(t) = rho.terms.iter().find(|t| t.powers.len() != n) {
                    return Err(Error::InvalidDomain(format!(
                        "monomial exponent list has length {}, expected {n}",
                        t.powers.len()
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn convexity_certificate(&self) -> Option<bool> {
        self.convexity_certificate
    }

    pub fn with_convexity_certificate(mut self, certified: Option<bool>) -> Self {
        self.convexity_certificate = certified;
        self
    }

    /// Ball and ellipsoid are convex by construction; radial graphs only when certified.
    pub fn is_known_convex(&self) -> bool {
        match self.family {
            Family::Ball { .. } | Family::Ellipsoid { .. } => true,
            Family::RadialGraph(_) => self.convexity_certificate == Some(true),
        }
    }

    /// Boundary distance from the origin along the unit direction `u`.
    pub fn radial(&self, u: &[f64]) -> f64 {
        match &self.family {
            Family::Ball { radius } => *radius,
            Family::Ellipsoid { axes } => {
                let q: f64 = u.iter().zip(axes).map(|(x, a)| (x / a) * (x / a)).sum();
                1.0 / q.sqrt()
            }
            Family::RadialGraph(rho) => rho.value(u),
        }
    }

    /// Upper bound on `max ρ`.
    pub fn bounding_radius(&self) -> f64 {
        match &self.family {
            Family::Ball { radius } => *radius,
            Family::Ellipsoid { axes } => axes.iter().cloned().fold(0.0, f64::max),
            Family::RadialGraph(rho) => rho.sup_bound(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.family {
            Family::Ball { radius } => dot(x, x) <= radius * radius,
            Family::Ellipsoid { axes } => x.iter().zip(axes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>() <= 1.0,
            Family::RadialGraph(rho) => {
                let r = norm(x);
                if r == 0.0 {
                    return rho.base > 0.0 || rho.value(&unit(self.dim, 0)) > 0.0;
                }
                let u: SmallVector<f64> = x.iter().map(|v| v / r).collect();
                r <= rho.value(&u)
            }
        }
    }

    /// Closed-form implicit function and derivatives at `x ≠ 0`.
    ///
    /// * ball: `F = (|x|² − R²)/2`
    /// * ellipsoid: `F = (Σ x_i²/a_i² − 1)/2`
    /// * radial graph: `F = |x| − ρ(x/|x|)`
    pub fn implicit(&self, x: &[f64]) -> ImplicitEval {
        let n = self.dim;
        match &self.family {
            Family::Ball { radius } => ImplicitEval {
                value: 0.5 * (dot(x, x) - radius * radius),
                gradient: x.iter().copied().collect(),
                hessian: SymMatrix::identity(n),
            },
            Family::Ellipsoid { axes } => {
                let inv2: SmallVector<f64> = axes.iter().map(|a| 1.0 / (a * a)).collect();
                ImplicitEval {
                    value: 0.5 * (x.iter().zip(&inv2).map(|(v, w)| v * v * w).sum::<f64>() - 1.0),
                    gradient: x.iter().zip(&inv2).map(|(v, w)| v * w).collect(),
                    hessian: SymMatrix::from_diagonal(&inv2),
                }
            }
            Family::RadialGraph(rho) => radial_implicit(rho, x),
        }
    }
}

pub(crate) fn unit(n: usize, i: usize) -> SmallVector<f64> {
    let mut e: SmallVector<f64> = SmallVector::from_elem(0.0, n);
    e[i] = 1.0;
    e
}

/// Derivatives of `F(x) = |x| − ρ(x/|x|)`.
///
/// With `r = |x|`, `u = x/r`, `P = I − u uᵀ`, `g = ∇ρ(u)`, `K = ∇²ρ(u)`:
/// `∇[ρ(x/|x|)] = P g / r` and
/// `∇²[ρ(x/|x|)] = (P K P − (u·g) P − u (Pg)ᵀ − (Pg) uᵀ) / r²`.
fn radial_implicit(rho: &RadialFunction, x: &[f64]) -> ImplicitEval {
    let n = x.len();
    let r = norm(x);
    let u: SmallVector<f64> = x.iter().map(|v| v / r).collect();
    let g = rho.gradient(&u);
    let k = rho.hessian(&u);
    let ug = dot(&u, &g);
    let pg: SmallVector<f64> = (0..n).map(|i| g[i] - u[i] * ug).collect();
    let proj = |i: usize, j: usize| if i == j { 1.0 - u[i] * u[j] } else { -u[i] * u[j] };
    // K P columns, then P (K P)
    let kp: Vec<f64> = {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..n).map(|l| k.get(i, l) * proj(l, j)).sum();
            }
        }
        m
    };
    let r2 = r * r;
    let hess = SymMatrix::from_fn(n, |i, j| {
        let pkp: f64 = (0..n).map(|l| proj(i, l) * kp[l * n + j]).sum();
        let rho_hess = (pkp - ug * proj(i, j) - u[i] * pg[j] - pg[i] * u[j]) / r2;
        proj(i, j) / r - rho_hess
    });
    ImplicitEval { value: r - rho.value(&u), gradient: (0..n).map(|i| u[i] - pg[i] / r).collect(), hessian: hess }
}

/// Wire form of [`DomainSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DomainDocument {
    family: String,
    dim: usize,
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    convexity_certificate: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BallParams {
    radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EllipsoidParams {
    axes: Vec<f64>,
}

impl TryFrom<DomainDocument> for DomainSpec {
    type Error = Error;

    fn try_from(doc: DomainDocument) -> Result<Self> {
        let family = match doc.family.as_str() {
            "ball" => {
                let p: BallParams = serde_json::from_value(doc.params)?;
                Family::Ball { radius: p.radius }
            }
            "ellipsoid" => {
                let p: EllipsoidParams = serde_json::from_value(doc.params)?;
                Family::Ellipsoid { axes: p.axes }
            }
            "radial_graph" => Family::RadialGraph(serde_json::from_value(doc.params)?),
            other => {
                return Err(Error::InvalidDomain(format!(
                    "unknown family '{other}' (expected ball, ellipsoid or radial_graph)"
                )))
            }
        };
        DomainSpec::new(doc.dim, family, doc.convexity_certificate)
    }
}

impl From<DomainSpec> for DomainDocument {
    fn from(spec: DomainSpec) -> Self {
        let params = match &spec.family {
            Family::Ball { radius } => serde_json::to_value(BallParams { radius: *radius }),
            Family::Ellipsoid { axes } => serde_json::to_value(EllipsoidParams { axes: axes.clone() }),
            Family::RadialGraph(rho) => serde_json::to_value(rho),
        }
        .expect("domain parameters serialize");
        DomainDocument {
            family: spec.family.name().to_string(),
            dim: spec.dim,
            params,
            convexity_certificate: spec.convexity_certificate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(spec: &DomainSpec, x: &[f64]) {
        let h = 1e-5;
        let e = spec.implicit(x);
        let n = x.len();
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let (ep, em) = (spec.implicit(&xp), spec.implicit(&xm));
            let dg = (ep.value - em.value) / (2.0 * h);
            assert!((dg - e.gradient[j]).abs() < 1e-8, "gradient {j}: {dg} vs {}", e.gradient[j]);
            for i in 0..n {
                let dh = (ep.gradient[i] - em.gradient[i]) / (2.0 * h);
                assert!((dh - e.hessian.get(i, j)).abs() < 1e-7, "hessian ({i},{j}): {dh} vs {}", e.hessian.get(i, j));
            }
        }
    }

    #[test]
    fn radial_graph_derivatives_match_finite_differences() {
        let rho = RadialFunction {
            base: 1.2,
            terms: vec![
                Monomial { coeff: 0.1, powers: vec![1, 0, 1] },
                Monomial { coeff: -0.05, powers: vec![0, 2, 0] },
                Monomial { coeff: 0.07, powers: vec![0, 0, 3] },
            ],
        };
        let spec = DomainSpec::radial_graph(3, rho, None).unwrap();
        fd_check(&spec, &[0.3, -0.7, 0.9]);
        fd_check(&spec, &[1.1, 0.2, -0.4]);
    }

    #[test]
    fn closed_form_families_match_finite_differences() {
        fd_check(&DomainSpec::ellipsoid(&[1.0, 2.0, 3.0]).unwrap(), &[0.4, 1.0, -2.0]);
        fd_check(&DomainSpec::ball(4, 2.0).unwrap(), &[0.4, 1.0, -2.0, 0.1]);
    }

    #[test]
    fn json_round_trip() {
        let specs = vec![
            DomainSpec::ball(3, 1.5).unwrap(),
            DomainSpec::ellipsoid(&[1.0, 1.0, 2.0]).unwrap(),
            DomainSpec::perturbed_sphere(3, 0.1, 0.3).unwrap().with_convexity_certificate(Some(true)),
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: DomainSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn parses_documented_layout() {
        let text = r#"{"family":"radial_graph","dim":3,"params":{"base":1.0,"terms":[{"coeff":0.03,"powers":[0,0,1]}]},"convexity_certificate":true}"#;
        let spec: DomainSpec = serde_json::from_str(text).unwrap();
        assert!(spec.is_known_convex());
        assert!((spec.radial(&[0.0, 0.0, 1.0]) - 1.03).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_domains() {
        assert!(DomainSpec::ball(3, -1.0).is_err());
        assert!(DomainSpec::ball(7, 1.0).is_err());
        assert!(DomainSpec::ball(1, 1.0).is_err());
        assert!(DomainSpec::new(4, Family::Ellipsoid { axes: vec![1.0, 1.0, 2.0] }, None).is_err());
        let bad = r#"{"family":"torus","dim":3,"params":{}}"#;
        assert!(serde_json::from_str::<DomainSpec>(bad).is_err());
    }

    #[test]
    fn containment() {
        let e = DomainSpec::ellipsoid(&[1.0, 2.0]).unwrap();
        assert!(e.contains(&[0.0, 1.9]));
        assert!(!e.contains(&[0.9, 1.0]));
        let r = DomainSpec::perturbed_sphere(2, 0.5, 0.3).unwrap();
        assert!(r.contains(&[0.0, 1.1]));
        assert!(!r.contains(&[0.0, -0.9]));
    }
}
