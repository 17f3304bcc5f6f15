//! Brenier potentials pushing the uniform probability measure on a domain to the
//! uniform measure on the unit ball, and diagnostics for them.

mod polygon;
mod semidiscrete;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{DomainSpec, Family, SphereRule};
use crate::symfun::{determinant, newton_tensor, norm, SmallVector, SymMatrix};

pub use semidiscrete::{
    semidiscrete_solve, sunflower_targets, DualWeights, IterationRecord, SemiDiscreteMap, SemiDiscreteSolver,
    SolveOutcome, SolverOptions, MIN_TARGETS, POLYGON_VERTICES,
};

/// Relative slack allowed when deciding that a point lies in the closed domain.
const INSIDE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    SemiDiscrete,
}

#[derive(Debug, Clone)]
enum Kind {
    /// `φ(x) = Σ x_i² / (2 a_i)`.
    Quadratic {
        axes: Vec<f64>,
    },
    SemiDiscrete(Box<SemiDiscreteMap>),
}

/// Convex potential `φ` on a domain with ambient gradient and Hessian.
#[derive(Debug, Clone)]
pub struct Potential {
    spec: DomainSpec,
    kind: Kind,
    /// Multiplier `c` for the scaled potential `cφ`.
    scale: f64,
}

/// Linear Brenier map of a ball or ellipsoid onto the unit ball.
pub fn closed_form_potential(spec: &DomainSpec) -> Result<Potential> {
    let axes = match spec.family() {
        Family::Ball { radius } => vec![*radius; spec.dim()],
        Family::Ellipsoid { axes } => axes.clone(),
        Family::RadialGraph(_) => {
            return Err(Error::UnsupportedDomain(
                "no closed-form potential for radial graphs; use semidiscrete_solve (planar domains)".into(),
            ))
        }
    };
    Ok(Potential { spec: spec.clone(), kind: Kind::Quadratic { axes }, scale: 1.0 })
}

/// Potential of a converged semi-discrete solve. `smoothing_radius` is the
/// radius of the affine regression used for the Hessian.
pub fn potential_from_weights(weights: &DualWeights, smoothing_radius: f64) -> Result<Potential> {
    let map = SemiDiscreteMap::new(weights.clone(), smoothing_radius)?;
    Ok(Potential { spec: weights.domain.clone(), kind: Kind::SemiDiscrete(Box::new(map)), scale: 1.0 })
}

/// Default regression radius `3 N^{−1/2} diam(Ω)`.
pub fn default_smoothing_radius(weights: &DualWeights) -> f64 {
    3.0 * (weights.len() as f64).powf(-0.5) * 2.0 * weights.domain.bounding_radius()
}

/// Whether `x` lies in the closed domain up to a relative slack.
pub(crate) fn inside_with_slack(spec: &DomainSpec, x: &[f64], slack: f64) -> bool {
    let r = norm(x);
    if r == 0.0 {
        return true;
    }
    let u: SmallVector<f64> = x.iter().map(|v| v / r).collect();
    r <= spec.radial(&u) * (1.0 + slack)
}

impl Potential {
    pub fn provenance(&self) -> Provenance {
        match self.kind {
            Kind::Quadratic { .. } => Provenance::ClosedForm,
            Kind::SemiDiscrete(_) => Provenance::SemiDiscrete,
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    /// The potential `cφ` for `0 < c <= 1`; it still maps into the unit ball.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return domain(format!("potential scale {c} must lie in (0, 1]"));
        }
        Ok(Self { scale: self.scale * c, ..self.clone() })
    }

    pub fn semi_discrete_map(&self) -> Option<&SemiDiscreteMap> {
        match &self.kind {
            Kind::SemiDiscrete(map) => Some(map),
            Kind::Quadratic { .. } => None,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return domain(format!("point has {} coordinates, expected {}", x.len(), self.dim()));
        }
        match &self.kind {
            Kind::Quadratic { .. } => {
                if !inside_with_slack(&self.spec, x, INSIDE_SLACK) {
                    return domain(format!("point {x:?} lies outside the domain"));
                }
                Ok(())
            }
            Kind::SemiDiscrete(map) => map.check_inside(x),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let v = match &self.kind {
            Kind::Quadratic { axes } => x.iter().zip(axes).map(|(v, a)| v * v / (2.0 * a)).sum(),
            Kind::SemiDiscrete(map) => map.value(x)?,
        };
        Ok(self.scale * v)
    }

    /// Ambient gradient `∇̄φ(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<SmallVector<f64>> {
        self.check_point(x)?;
        let g: SmallVector<f64> = match &self.kind {
            Kind::Quadratic { axes } => x.iter().zip(axes).map(|(v, a)| v / a).collect(),
            Kind::SemiDiscrete(map) => map.gradient(x)?.into_iter().collect(),
        };
        Ok(g.into_iter().map(|v| self.scale * v).collect())
    }

    /// Ambient Hessian `∇̄²φ(x)`.
    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix<f64>> {
        self.check_point(x)?;
        self.hessian_unchecked(x)
    }

    fn hessian_unchecked(&self, x: &[f64]) -> Result<SymMatrix<f64>> {
        Ok(match &self.kind {
            Kind::Quadratic { axes } => {
                SymMatrix::from_fn(axes.len(), |i, j| if i == j { self.scale / axes[i] } else { 0.0 })
            }
            Kind::SemiDiscrete(map) => map.hessian(x)?.scale(self.scale),
        })
    }

    /// Gradient and Hessian with a single domain check.
    pub fn derivatives(&self, x: &[f64]) -> Result<(SmallVector<f64>, SymMatrix<f64>)> {
        let g = self.gradient(x)?;
        Ok((g, self.hessian_unchecked(x)?))
    }
}

/// `max |det ∇̄²φ(x) − ω_n/vol| / (ω_n/vol)` over the given points.
pub fn monge_ampere_residual(p: &Potential, points: &[Vec<f64>]) -> Result<f64> {
    let n = p.dim();
    let vol = exact_or_polygon_volume(p)?;
    let target = crate::geometry::unit_ball_volume(n)? / vol;
    let mut worst = 0.0f64;
    for x in points {
        if !inside_with_slack(&p.spec, x, INSIDE_SLACK) {
            return domain(format!("point {x:?} lies outside the domain"));
        }
        let det = determinant(&p.hessian(x)?);
        worst = worst.max((det - target).abs() / target);
    }
    Ok(worst)
}

/// Volume the potential was built for: closed form for balls and ellipsoids,
/// the solver polygon for semi-discrete maps.
fn exact_or_polygon_volume(p: &Potential) -> Result<f64> {
    match &p.kind {
        Kind::Quadratic { axes } => Ok(crate::geometry::unit_ball_volume(p.dim())? * axes.iter().product::<f64>()),
        Kind::SemiDiscrete(map) => Ok(map.dual_weights().polygon_area()),
    }
}

/// Equal-mass volume quadrature: `layers` radial shells at the mass midpoints
/// `t_i = ((i + ½)/layers)^{1/n}` times the sphere rule of the given order.
/// Ellipsoids use the affine chart, other families the radial chart. Weights
/// sum to one.
pub fn volume_nodes(spec: &DomainSpec, order: usize, layers: usize) -> Result<Vec<(SmallVector<f64>, f64)>> {
    if layers == 0 {
        return domain("need at least one radial layer");
    }
    let rule = SphereRule::new(spec.dim(), order.clamp(crate::geometry::MIN_ORDER, crate::geometry::MAX_ORDER));
    let n = spec.dim();
    let mut nodes = Vec::with_capacity(rule.len() * layers);
    let mut total = 0.0;
    for i in 0..rule.len() {
        let (u, dsigma) = rule.node(i);
        let (edge, w): (SmallVector<f64>, f64) = match spec.family() {
            Family::Ellipsoid { axes } => (u.iter().zip(axes).map(|(v, a)| v * a).collect(), dsigma),
            _ => {
                let r = spec.radial(&u);
                (u.iter().map(|v| v * r).collect(), dsigma * r.powi(n as i32))
            }
        };
        for l in 0..layers {
            let t = ((l as f64 + 0.5) / layers as f64).powf(1.0 / n as f64);
            nodes.push((edge.iter().map(|v| v * t).collect(), w));
            total += w;
        }
    }
    nodes.iter_mut().for_each(|(_, w)| *w /= total);
    Ok(nodes)
}

/// Kolmogorov–Smirnov distance between the radial distribution of the image
/// `∇̄φ(x_i)` of an equal-mass volume quadrature and the uniform ball, whose
/// radial CDF is `r^n`. Uses `16·order` radial layers.
pub fn pushforward_check(p: &Potential, order: usize) -> Result<f64> {
    let n = p.dim();
    let nodes = volume_nodes(&p.spec, order, 16 * order.max(1))?;
    let mut image: Vec<(f64, f64)> =
        nodes.iter().map(|(x, w)| Ok((norm(&p.gradient(x)?), *w))).collect::<Result<_>>()?;
    image.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cdf = 0.0;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < image.len() {
        let r = image[i].0;
        let model = r.clamp(0.0, 1.0).powi(n as i32);
        worst = worst.max((cdf - model).abs());
        while i < image.len() && image[i].0 == r {
            cdf += image[i].1;
            i += 1;
        }
        worst = worst.max((cdf - model).abs());
    }
    Ok(worst)
}

/// Convex cubic `φ(x) = ½ xᵀQx + ⅙ Σ c_ijk x_i x_j x_k` with a symmetric
/// third-order tensor, used to exercise the divergence-free property of
/// Newton tensors of Hessians.
#[derive(Debug, Clone)]
pub struct CubicPotential {
    pub quadratic: SymMatrix<f64>,
    /// `c[i][j][k]`, symmetric in all indices.
    pub cubic: Vec<Vec<Vec<f64>>>,
}

impl CubicPotential {
    /// Symmetrizes the given tensor.
    pub fn new(quadratic: SymMatrix<f64>, cubic: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = quadratic.dim();
        if cubic.len() != n || cubic.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return domain("cubic tensor shape does not match the quadratic part");
        }
        let sym = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|k| {
                                (cubic[i][j][k]
                                    + cubic[i][k][j]
                                    + cubic[j][i][k]
                                    + cubic[j][k][i]
                                    + cubic[k][i][j]
                                    + cubic[k][j][i])
                                    / 6.0
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { quadratic, cubic: sym })
    }

    pub fn dim(&self) -> usize {
        self.quadratic.dim()
    }

    pub fn hessian(&self, x: &[f64]) -> SymMatrix<f64> {
        let n = self.dim();
        SymMatrix::from_fn(n, |i, j| self.quadratic.get(i, j) + (0..n).map(|k| self.cubic[i][j][k] * x[k]).sum::<f64>())
    }

    pub fn gradient(&self, x: &[f64]) -> SmallVector<f64> {
        let n = self.dim();
        let qx = self.quadratic.mul_vec(x);
        (0..n)
            .map(|i| {
                let cubic: f64 = (0..n)
                    .flat_map(|j| (0..n).map(move |k| (j, k)))
                    .map(|(j, k)| self.cubic[i][j][k] * x[j] * x[k])
                    .sum();
                qx[i] + 0.5 * cubic
            })
            .collect()
    }
}

/// `Σ_j ∂_j [T_k(∇̄²φ)]_{ij}` by central differences with step `h`.
pub fn newton_divergence(hessian: impl Fn(&[f64]) -> SymMatrix<f64>, x: &[f64], k: usize, h: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let mut div = vec![0.0; n];
    let mut probe = x.to_vec();
    for j in 0..n {
        probe[j] = x[j] + h;
        let plus = newton_tensor(&hessian(&probe), k)?;
        probe[j] = x[j] - h;
        let minus = newton_tensor(&hessian(&probe), k)?;
        probe[j] = x[j];
        for (i, d) in div.iter_mut().enumerate() {
            *d += (plus.get(i, j) - minus.get(i, j)) / (2.0 * h);
        }
    }
    Ok(div)
}

/// `σ_{k+1}(M)/binom(n, k+1) − det(M)^{(k+1)/n}`, non-negative for PSD `M`.
pub fn arithmetic_geometric_gap(m: &SymMatrix<f64>, k: usize) -> Result<f64> {
    let n = m.dim();
    if k + 1 > n {
        return domain(format!("σ_{} undefined for a {n}x{n} matrix", k + 1));
    }
    let sigma = crate::symfun::elementary_symmetric(m, k + 1)?;
    let det = determinant(m).max(0.0);
    Ok(sigma / crate::geometry::binomial(n, k + 1) - det.powf((k + 1) as f64 / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_potential_is_a_dilation() {
        let p = closed_form_potential(&DomainSpec::ball(3, 2.0).unwrap()).unwrap();
        assert_eq!(p.gradient(&[2.0, 0.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert!((p.value(&[2.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(p.gradient(&[2.1, 0.0, 0.0]).is_err());
    }

    #[test]
    fn radial_graphs_have_no_closed_form() {
        let spec = DomainSpec::perturbed_sphere(3, 0.1, 0.3).unwrap();
        let err = closed_form_potential(&spec).unwrap_err();
        assert!(err.to_string().contains("semidiscrete_solve"));
    }

    #[test]
    fn scaling_is_bounded() {
        let p = closed_form_potential(&DomainSpec::ball(2, 1.0).unwrap()).unwrap();
        assert!(p.scaled(0.0).is_err() && p.scaled(1.5).is_err());
        let half = p.scaled(0.5).unwrap();
        assert_eq!(half.gradient(&[1.0, 0.0]).unwrap()[0], 0.5);
    }

    #[test]
    fn volume_nodes_have_unit_mass_and_stay_inside() {
        let spec = DomainSpec::ellipsoid(&[1.0, 2.0, 0.5]).unwrap();
        let nodes = volume_nodes(&spec, 8, 10).unwrap();
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(nodes.iter().all(|(x, _)| spec.contains(x)));
    }

    #[test]
    fn gap_is_zero_for_multiples_of_identity() {
        let m = SymMatrix::<f64>::scalar(4, 0.7);
        assert!(arithmetic_geometric_gap(&m, 1).unwrap().abs() < 1e-15);
        assert!(arithmetic_geometric_gap(&m, 4).is_err());
    }
}
