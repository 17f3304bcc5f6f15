//! Semi-discrete transport from the uniform measure on a planar domain to `N`
//! equal point masses filling the unit disk.
//!
//! With weights `ψ_j`, cell `j` is the Laguerre cell
//! `{x : |x − y_j|² − ψ_j <= |x − y_k|² − ψ_k for all k}` intersected with a
//! polygonal approximation of the domain. The potential
//! `φ(x) = max_j (x·y_j − (|y_j|² − ψ_j)/2)` has gradient `y_j` on cell `j`.
//! Weights are found by damped Newton on the concave dual
//! `Φ(ψ) = ½ Σ_j [ψ_j ν_j + ∫_{cell_j} (|x − y_j|² − ψ_j) dx]`, whose gradient is
//! `(ν − m(ψ))/2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{DomainSpec, Family};
use crate::symfun::SymMatrix;
use crate::transport::polygon::{Polygon, BOUNDARY};

/// Number of vertices of the polygon standing in for a planar domain.
pub const POLYGON_VERTICES: usize = 512;
pub const MIN_TARGETS: usize = 16;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Converged (or checkpointed) dual weights with everything needed to rebuild
/// the transport map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualWeights {
    pub domain: DomainSpec,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub masses: Vec<f64>,
    pub centroids: Vec<[f64; 2]>,
    /// `max_j |m_j − ν_j| / ν_j` with `ν_j = vol/N`.
    pub residual: f64,
    pub seed: u64,
}

impl DualWeights {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Area of the polygon the cells partition.
    pub fn polygon_area(&self) -> f64 {
        domain_polygon(&self.domain).area()
    }

    /// Mean over cells of `|y_j − f(c_j)|`, comparing the barycentric map
    /// (cell centroid to target) with a reference map `f`.
    pub fn mean_map_deviation(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
        let total: f64 = self
            .points
            .iter()
            .zip(&self.centroids)
            .map(|(y, c)| {
                let t = f(*c);
                (y[0] - t[0]).hypot(y[1] - t[1])
            })
            .sum();
        total / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub dual_value: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub weights: DualWeights,
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Target `max_j |m_j − ν_j| <= mass_tol · ν_j`.
    pub mass_tol: f64,
    pub max_iterations: usize,
    /// Smallest Newton step fraction tried before giving up.
    pub damping_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { mass_tol: 1e-9, max_iterations: 100, damping_floor: 1.0 / (1u64 << 30) as f64 }
    }
}

/// The 512-gon through boundary points at equally spaced angles.
pub(crate) fn domain_polygon(spec: &DomainSpec) -> Polygon {
    let vertices = (0..POLYGON_VERTICES)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / POLYGON_VERTICES as f64;
            let u = [t.cos(), t.sin()];
            let r = spec.radial(&u);
            [r * u[0], r * u[1]]
        })
        .collect();
    Polygon::new(vertices)
}

/// Sunflower fill of the unit disk, rotated by an angle drawn from `seed`.
pub fn sunflower_targets(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    (0..n)
        .map(|i| {
            let r = ((i as f64 + 0.5) / n as f64).sqrt();
            let t = offset + GOLDEN_ANGLE * i as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Cell {
    mass: f64,
    moment: f64,
    centroid: [f64; 2],
    /// `(neighbour, shared edge length)`.
    edges: Vec<(usize, f64)>,
}

/// Laguerre diagram machinery for a fixed target set and domain polygon.
pub(crate) struct Diagram {
    polygon: Polygon,
    points: Vec<[f64; 2]>,
    /// Other targets sorted by distance, per target.
    neighbours: Vec<Vec<u32>>,
}

impl Diagram {
    pub fn new(polygon: Polygon, points: Vec<[f64; 2]>) -> Self {
        let n = points.len();
        let neighbours = (0..n)
            .map(|j| {
                let mut idx: Vec<u32> = (0..n as u32).filter(|&k| k as usize != j).collect();
                let d = |k: u32| {
                    let (a, b) = (points[j], points[k as usize]);
                    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
                };
                idx.sort_by(|&a, &b| d(a).total_cmp(&d(b)).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { polygon, points, neighbours }
    }

    fn cell(&self, j: usize, psi: &[f64], psi_max: f64) -> Polygon {
        let y = self.points[j];
        let cy = y[0] * y[0] + y[1] * y[1] - psi[j];
        let mut poly = self.polygon.clone();
        let mut radius = poly.radius_about(y);
        for &k in &self.neighbours[j] {
            let k = k as usize;
            let z = self.points[k];
            let d = (z[0] - y[0]).hypot(z[1] - y[1]);
            if d >= radius && d * d - 2.0 * d * radius >= psi_max - psi[j] {
                break;
            }
            // |x − y|² − ψ_j <= |x − z|² − ψ_k  ⇔  2x·(z − y) <= c_z − c_y
            let cz = z[0] * z[0] + z[1] * z[1] - psi[k];
            let a = [2.0 * (z[0] - y[0]), 2.0 * (z[1] - y[1])];
            poly = poly.clip(a, cz - cy, k as i32);
            if poly.is_empty() {
                break;
            }
            radius = poly.radius_about(y);
        }
        poly
    }

    fn cells(&self, psi: &[f64]) -> Vec<Cell> {
        let psi_max = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..self.points.len())
            .map(|j| {
                let poly = self.cell(j, psi, psi_max);
                if poly.is_empty() {
                    return Cell { mass: 0.0, moment: 0.0, centroid: self.points[j], edges: Vec::new() };
                }
                let edges = poly
                    .labelled_lengths()
                    .into_iter()
                    .filter(|(k, _)| *k != BOUNDARY)
                    .map(|(k, len)| (k as usize, len))
                    .collect();
                Cell { mass: poly.area(), moment: poly.second_moment(self.points[j]), centroid: poly.centroid(), edges }
            })
            .collect()
    }
}

fn dual_value(cells: &[Cell], psi: &[f64], nu: f64) -> f64 {
    let terms: Vec<f64> = cells.iter().zip(psi).map(|(c, p)| 0.5 * (p * nu + c.moment - p * c.mass)).collect();
    crate::sum::pairwise_sum(&terms)
}

fn max_residual(cells: &[Cell], nu: f64) -> f64 {
    cells.iter().map(|c| (c.mass - nu).abs()).fold(0.0, f64::max) / nu
}

fn l2_residual(cells: &[Cell], nu: f64) -> f64 {
    cells.iter().map(|c| (c.mass - nu).powi(2)).sum::<f64>().sqrt()
}

/// Solves `J δ = r` for the mass Jacobian `J` (a weighted graph Laplacian) by
/// Jacobi-preconditioned conjugate gradients on the zero-mean subspace.
fn newton_direction(cells: &[Cell], points: &[[f64; 2]], rhs: &[f64]) -> Vec<f64> {
    let n = cells.len();
    // symmetric edge weights |e_jk| / (2|y_j − y_k|)
    let adjacency: Vec<Vec<(usize, f64)>> = cells
        .iter()
        .enumerate()
        .map(|(j, c)| {
            c.edges
                .iter()
                .map(|&(k, len)| {
                    let d = (points[j][0] - points[k][0]).hypot(points[j][1] - points[k][1]);
                    (k, len / (2.0 * d))
                })
                .collect()
        })
        .collect();
    let diag: Vec<f64> = adjacency.iter().map(|a| a.iter().map(|e| e.1).sum::<f64>()).collect();
    let scale = diag.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let apply = |x: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend((0..n).map(|j| diag[j] * x[j] - adjacency[j].iter().map(|&(k, w)| w * x[k]).sum::<f64>()));
    };
    let precond: Vec<f64> = diag.iter().map(|d| 1.0 / d.max(1e-12 * scale)).collect();
    let project = |v: &mut Vec<f64>| {
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = rhs.to_vec();
    project(&mut r);
    let r0 = dot(&r, &r).sqrt();
    if r0 == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = Vec::with_capacity(n);
    for _ in 0..4 * n {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        if dot(&r, &r).sqrt() <= 1e-13 * r0 {
            break;
        }
        z = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    project(&mut x);
    x
}

fn check_inputs(spec: &DomainSpec, n_targets: usize) -> Result<()> {
    if spec.dim() != 2 {
        return Err(Error::UnsupportedDomain(format!(
            "semi-discrete transport is implemented for planar domains only (got dimension {})",
            spec.dim()
        )));
    }
    if n_targets < MIN_TARGETS {
        return domain(format!("need at least {MIN_TARGETS} target points, got {n_targets}"));
    }
    if let Family::RadialGraph(rho) = spec.family() {
        for k in 0..POLYGON_VERTICES {
            let t = 2.0 * std::f64::consts::PI * k as f64 / POLYGON_VERTICES as f64;
            if !(rho.value(&[t.cos(), t.sin()]) > 0.0) {
                return Err(Error::InvalidDomain("radial function must be positive".into()));
            }
        }
    }
    Ok(())
}

/// Solves for dual weights with default options.
pub fn semidiscrete_solve(spec: &DomainSpec, n_targets: usize, mass_tol: f64, seed: u64) -> Result<DualWeights> {
    let options = SolverOptions { mass_tol, ..SolverOptions::default() };
    Ok(SemiDiscreteSolver::new(spec, n_targets, seed, options)?.solve()?.weights)
}

pub struct SemiDiscreteSolver {
    spec: DomainSpec,
    seed: u64,
    options: SolverOptions,
    diagram: Diagram,
    nu: f64,
}

impl SemiDiscreteSolver {
    pub fn new(spec: &DomainSpec, n_targets: usize, seed: u64, options: SolverOptions) -> Result<Self> {
        check_inputs(spec, n_targets)?;
        if !(options.mass_tol > 0.0) {
            return domain("mass tolerance must be positive");
        }
        let polygon = domain_polygon(spec);
        let nu = polygon.area() / n_targets as f64;
        let diagram = Diagram::new(polygon, sunflower_targets(n_targets, seed));
        Ok(Self { spec: spec.clone(), seed, options, diagram, nu })
    }

    /// Starts from scaled Voronoi cells: `ψ_j = (1 − λ)|y_j|²` makes the cells
    /// `λ·Vor(y_j)`, all of which meet the domain when `λ` is its inradius.
    pub fn initial_weights(&self) -> Vec<f64> {
        let poly = &self.diagram.polygon;
        let half = std::f64::consts::PI / POLYGON_VERTICES as f64;
        let inradius = poly.vertices.iter().map(|v| v[0].hypot(v[1])).fold(f64::INFINITY, f64::min) * half.cos();
        let lambda = 0.9 * inradius;
        self.diagram.points.iter().map(|y| (1.0 - lambda) * (y[0] * y[0] + y[1] * y[1])).collect()
    }

    pub fn solve(&self) -> Result<SolveOutcome> {
        self.solve_from(self.initial_weights())
    }

    /// Resumes from a checkpoint; a converged checkpoint returns after zero iterations.
    pub fn resume(&self, checkpoint: &DualWeights) -> Result<SolveOutcome> {
        if checkpoint.points != self.diagram.points || checkpoint.domain != self.spec {
            return domain("checkpoint does not match the domain, target count or seed");
        }
        self.solve_from(checkpoint.weights.clone())
    }

    fn solve_from(&self, mut psi: Vec<f64>) -> Result<SolveOutcome> {
        let nu = self.nu;
        let points = &self.diagram.points;
        let mut cells = self.diagram.cells(&psi);
        if cells.iter().any(|c| c.mass <= 0.0) {
            return domain("initial weights leave an empty cell");
        }
        let eps0 = 0.5 * cells.iter().map(|c| c.mass).fold(nu, f64::min);
        let mut value = dual_value(&cells, &psi, nu);
        let mut residual = max_residual(&cells, nu);
        let mut log = vec![IterationRecord { iteration: 0, dual_value: value, residual, step: 0.0 }];
        let mut iteration = 0;
        while residual > self.options.mass_tol {
            if iteration == self.options.max_iterations {
                return Err(Error::SolverDivergence { iterations: iteration, residual });
            }
            iteration += 1;
            let rhs: Vec<f64> = cells.iter().map(|c| nu - c.mass).collect();
            let delta = newton_direction(&cells, points, &rhs);
            let norm0 = l2_residual(&cells, nu);
            let mut tau = 1.0;
            loop {
                let trial: Vec<f64> = psi.iter().zip(&delta).map(|(p, d)| p + tau * d).collect();
                let trial_cells = self.diagram.cells(&trial);
                let min_mass = trial_cells.iter().map(|c| c.mass).fold(f64::INFINITY, f64::min);
                let trial_value = dual_value(&trial_cells, &trial, nu);
                let ok_mass = min_mass >= eps0;
                let ok_residual = l2_residual(&trial_cells, nu) <= (1.0 - 0.5 * tau) * norm0;
                let ok_value = trial_value >= value - 1e-14 * value.abs().max(nu);
                if ok_mass && ok_residual && ok_value {
                    psi = trial;
                    cells = trial_cells;
                    value = trial_value;
                    break;
                }
                tau *= 0.5;
                if tau < self.options.damping_floor {
                    return Err(Error::DampingFloor { iteration, residual });
                }
            }
            residual = max_residual(&cells, nu);
            log.push(IterationRecord { iteration, dual_value: value, residual, step: tau });
        }
        let weights = DualWeights {
            domain: self.spec.clone(),
            points: points.clone(),
            masses: cells.iter().map(|c| c.mass).collect(),
            centroids: cells.iter().map(|c| c.centroid).collect(),
            weights: psi,
            residual,
            seed: self.seed,
        };
        Ok(SolveOutcome { weights, log })
    }
}

/// Transport map rebuilt from dual weights: exact cell lookup for the gradient
/// and local affine regression of the barycentric map for the Hessian.
#[derive(Clone)]
pub struct SemiDiscreteMap {
    weights: DualWeights,
    polygon: Polygon,
    diagram_points: Vec<[f64; 2]>,
    radius: f64,
    size: f64,
}

impl std::fmt::Debug for SemiDiscreteMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SemiDiscreteMap").field("targets", &self.weights.len()).field("radius", &self.radius).finish()
    }
}

impl SemiDiscreteMap {
    pub(crate) fn new(weights: DualWeights, radius: f64) -> Result<Self> {
        if weights.is_empty() || weights.weights.len() != weights.len() || weights.centroids.len() != weights.len() {
            return domain("dual weights are empty or inconsistent");
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return domain(format!("smoothing radius {radius} must be positive"));
        }
        let polygon = domain_polygon(&weights.domain);
        let diagram_points = weights.points.clone();
        let size = polygon.radius_about([0.0, 0.0]);
        Ok(Self { weights, polygon, diagram_points, radius, size })
    }

    pub fn dual_weights(&self) -> &DualWeights {
        &self.weights
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Rejects points farther outside the polygon than a small fraction of its size.
    pub(crate) fn check_inside(&self, x: &[f64]) -> Result<()> {
        let r = x[0].hypot(x[1]);
        let n = POLYGON_VERTICES;
        let mut t = x[1].atan2(x[0]);
        if t < 0.0 {
            t += 2.0 * std::f64::consts::PI;
        }
        let k = ((t / (2.0 * std::f64::consts::PI) * n as f64) as usize).min(n - 1);
        let (p, q) = (self.polygon.vertices[k], self.polygon.vertices[(k + 1) % n]);
        // signed distance to the chord, positive outside
        let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
        let len = ex.hypot(ey);
        let outside = ((x[0] - p[0]) * ey - (x[1] - p[1]) * ex) / len;
        if r > 0.0 && outside > 1e-3 * self.size {
            return domain(format!("point ({}, {}) lies outside the polygonal domain", x[0], x[1]));
        }
        Ok(())
    }

    fn locate(&self, x: &[f64]) -> usize {
        let psi = &self.weights.weights;
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, y) in self.diagram_points.iter().enumerate() {
            let v = x[0] * y[0] + x[1] * y[1] - 0.5 * (y[0] * y[0] + y[1] * y[1] - psi[j]);
            if v > best.0 {
                best = (v, j);
            }
        }
        best.1
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_inside(x)?;
        let j = self.locate(x);
        let y = self.diagram_points[j];
        Ok(x[0] * y[0] + x[1] * y[1] - 0.5 * (y[0] * y[0] + y[1] * y[1] - self.weights.weights[j]))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.check_inside(x)?;
        Ok(self.diagram_points[self.locate(x)])
    }

    /// Kernel-weighted affine fit `y ≈ a + M(c − x)` over cell centroids `c`
    /// within the smoothing radius; returns `M` symmetrized and clamped to PSD.
    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix<f64>> {
        self.check_inside(x)?;
        let mut radius = self.radius;
        loop {
            if let Some(m) = self.regress(x, radius) {
                let sym = SymMatrix::from_fn(2, |i, j| 0.5 * (m[i][j] + m[j][i]));
                return Ok(sym.map_spectrum(|v| v.max(0.0)));
            }
            radius *= 2.0;
            if radius > 1e3 * self.radius {
                return domain("too few cells near the evaluation point for Hessian recovery");
            }
        }
    }

    fn regress(&self, x: &[f64], radius: f64) -> Option<[[f64; 2]; 2]> {
        // normal equations for the basis (1, dx, dy)
        let mut ata = [[0.0; 3]; 3];
        let mut aty = [[0.0; 2]; 3];
        let mut count = 0;
        for (c, y) in self.weights.centroids.iter().zip(&self.diagram_points) {
            let d = [c[0] - x[0], c[1] - x[1]];
            let q = (d[0] * d[0] + d[1] * d[1]) / (radius * radius);
            if q >= 1.0 {
                continue;
            }
            count += 1;
            let w = (1.0 - q) * (1.0 - q);
            let basis = [1.0, d[0], d[1]];
            for a in 0..3 {
                for b in 0..3 {
                    ata[a][b] += w * basis[a] * basis[b];
                }
                for (o, yo) in y.iter().enumerate() {
                    aty[a][o] += w * basis[a] * yo;
                }
            }
        }
        if count < 6 {
            return None;
        }
        let sym = SymMatrix::from_fn(3, |a, b| ata[a][b]);
        let mut m = [[0.0; 2]; 2];
        for o in 0..2 {
            let rhs = [aty[0][o], aty[1][o], aty[2][o]];
            let coef = sym.solve_spd(&rhs).ok()?;
            m[o] = [coef[1], coef[2]];
        }
        Some(m)
    }
}
