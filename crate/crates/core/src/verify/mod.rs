//! Boundary fields of a Brenier potential, the second- and third-order
//! boundary functionals built from them, and the inequality chains
//!
//! `Vol^{(n−2)/n} ≤ c₁ ∫ T₁(∇̄²φ)(∇̄φ, ν) ≤ c₁ (∫H − ⅓∫T₁(L)(∇φ,∇φ)) ≤ c₁ ∫H`
//! `Vol^{(n−3)/n} ≤ c₂ ∫ T₂(∇̄²φ)(∇̄φ, ν) ≤ c₂ (∫σ₂(L) − ¼∫T₂(L)(∇φ,∇φ)) ≤ c₂ ∫σ₂(L)`
//!
//! with `c₁ = ω_n^{−2/n}/(n(n−1))` and `c₂ = ω_n^{−3/n}/(3 binom(n,3))`.

mod fields;
pub mod identities;
mod report;

use std::collections::BTreeMap;

use crate::error::{domain, Error, Result};
use crate::geometry::{binomial, omega, quermass_from_integrals, DomainSpec, QuadratureGrid};
use crate::series::{Series, SeriesConfig};
use crate::sum::PairwiseAccumulator;
use crate::symfun::{dot, elementary_symmetric_of, SymMatrix};
use crate::transport::Potential;

pub use crate::series::p_pointwise;
pub use fields::{boundary_fields, BoundaryFields, DEFAULT_TOL_MAP};
pub use report::{CheckReport, ConeReport, Link, QuadratureInfo, ReportProvenance, Verdict};

use fields::{check_same_domain, second, second_order_terms, third, third_order_terms};

/// Default relative tolerance for closed-form potentials and geometry-only checks.
pub const CLOSED_FORM_TOL: f64 = 1e-6;
/// Default relative tolerance for semi-discrete potentials.
pub const SEMI_DISCRETE_TOL: f64 = 5e-2;
const MAX_FLAGGED: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Truncation and range for `F`, `G`.
    pub series: SeriesConfig<f64>,
    /// Overrides the provenance default tolerance.
    pub tol: Option<f64>,
    /// Allowed excess of `|∇̄φ|` over one at boundary nodes.
    pub tol_map: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { series: SeriesConfig::default(), tol: None, tol_map: DEFAULT_TOL_MAP }
    }
}

impl CheckConfig {
    fn tolerance(&self, provenance: ReportProvenance) -> f64 {
        self.tol.unwrap_or(match provenance {
            ReportProvenance::SemiDiscrete => SEMI_DISCRETE_TOL,
            _ => CLOSED_FORM_TOL,
        })
    }
}

fn weighted_sums<const K: usize>(
    fields: &[BoundaryFields],
    f: impl Fn(&BoundaryFields) -> Result<[f64; K]>,
) -> Result<[f64; K]> {
    let mut acc: [PairwiseAccumulator; K] = std::array::from_fn(|_| PairwiseAccumulator::new());
    for x in fields {
        for (a, v) in acc.iter_mut().zip(f(x)?) {
            a.add(x.weight * v);
        }
    }
    Ok(acc.map(|a| a.total()))
}

/// `∫ [T_k]_{ij}(∇̄²φ) φ_i ν_j dμ` for `k ∈ {1, 2}`.
pub fn boundary_term(grid: &QuadratureGrid, p: &Potential, k: usize) -> Result<f64> {
    if !(1..=2).contains(&k) {
        return domain(format!("boundary term order k = {k} must be 1 or 2"));
    }
    check_same_domain(grid, p)?;
    let mut acc = PairwiseAccumulator::new();
    for (i, s) in grid.samples().enumerate() {
        let f = BoundaryFields::new(i, &s, p, DEFAULT_TOL_MAP)?;
        acc.add(s.weight * f.boundary_integrand(k)?);
    }
    Ok(acc.total())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderL {
    pub l21: f64,
    pub l22: f64,
    /// `−2∫∇φ·∇(φ_n)`, equal to `l21` after integration by parts.
    pub l21_by_parts: f64,
}

pub fn l_decomposition_2(fields: &[BoundaryFields]) -> Result<SecondOrderL> {
    let t = weighted_sums(fields, second_order_terms)?;
    Ok(SecondOrderL { l21: t[second::L21], l22: t[second::L22], l21_by_parts: t[second::L21_BY_PARTS] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderM {
    pub m21: f64,
    pub m22: f64,
    pub t1l_energy: f64,
}

pub fn m_functionals_2(fields: &[BoundaryFields]) -> Result<SecondOrderM> {
    let t = weighted_sums(fields, second_order_terms)?;
    Ok(SecondOrderM { m21: t[second::M21], m22: t[second::M22], t1l_energy: t[second::T1L] })
}

/// `|∫Δφ|∇φ|^{2k} − (2k/(2k+1))∫[T₁(∇²φ)](∇φ,∇φ)|∇φ|^{2(k−1)}|`.
pub fn jk_recursion_residual(fields: &[BoundaryFields], k: usize) -> Result<f64> {
    if k == 0 {
        return domain("recursion index k must be at least 1");
    }
    let kf = k as f64;
    let [lhs, rhs] = weighted_sums(fields, |f| {
        let s2 = dot(&f.grad, &f.grad);
        let t1 = crate::symfun::newton_first(&f.hess).quadratic_form(&f.grad);
        Ok([f.laplacian() * s2.powi(k as i32), 2.0 * kf / (2.0 * kf + 1.0) * t1 * s2.powi(k as i32 - 1)])
    })?;
    Ok((lhs - rhs).abs())
}

/// `|∫σ₂(∇²φ)|∇φ|^{2k} − (k/(k+1))∫[T₂(∇²φ)](∇φ,∇φ)|∇φ|^{2(k−1)} − ∫Ric(∇φ,∇φ)|∇φ|^{2k}/(2(k+1))|`.
pub fn ak_recursion_residual(fields: &[BoundaryFields], k: usize) -> Result<f64> {
    if k == 0 {
        return domain("recursion index k must be at least 1");
    }
    let kf = k as f64;
    let [lhs, rhs] = weighted_sums(fields, |f| {
        let g = &f.grad;
        let s2 = dot(g, g);
        let sigma2 = 0.5 * crate::symfun::polarization_sigma2(&f.hess, &f.hess)?;
        let t2 = crate::symfun::newton_tensor_mixed(&f.hess, &f.hess)?.quadratic_form(g);
        let ric = crate::geometry::ricci_from_gauss(&f.shape).quadratic_form(g);
        Ok([
            sigma2 * s2.powi(k as i32),
            kf / (kf + 1.0) * t2 * s2.powi(k as i32 - 1) + ric * s2.powi(k as i32) / (2.0 * (kf + 1.0)),
        ])
    })?;
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderL {
    pub l31: f64,
    pub l32: f64,
    pub l33: f64,
}

pub fn l_decomposition_3(fields: &[BoundaryFields], series: &SeriesConfig<f64>) -> Result<ThirdOrderL> {
    let series = Series::new(*series)?;
    let t = weighted_sums(fields, |f| Ok(third_order_terms(f, &series)?.0))?;
    Ok(ThirdOrderL { l31: t[third::L31], l32: t[third::L32], l33: t[third::L33] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderM {
    pub m31: f64,
    /// `−2∫[T₂(∇²φ, L)](∇φ,∇φ)`, the form of `M32` after the Codazzi cancellation.
    pub m32: f64,
    /// `M32` evaluated from its definition.
    pub m32_direct: f64,
    pub m33: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub t2l_energy: f64,
}

pub fn m_functionals_3(fields: &[BoundaryFields], series: &SeriesConfig<f64>) -> Result<ThirdOrderM> {
    let series = Series::new(*series)?;
    let t = weighted_sums(fields, |f| Ok(third_order_terms(f, &series)?.0))?;
    Ok(ThirdOrderM {
        m31: t[third::M31],
        m32: t[third::M32_BY_PARTS],
        m32_direct: t[third::M32],
        m33: t[third::M33],
        e1: t[third::E1],
        e2: t[third::E2],
        e3: t[third::E3],
        t2l_energy: t[third::T2L],
    })
}

/// Totals from one streaming pass over the grid.
struct Pass<const K: usize> {
    sums: [f64; K],
    /// Maxima of the per-node extra values.
    maxima: [f64; 3],
    volume: f64,
    /// `∫σ_j(L)` for `j = 0..n−1`.
    curvature: Vec<f64>,
    cone: ConeReport,
}

fn run_pass<const K: usize>(
    grid: &QuadratureGrid,
    p: Option<&Potential>,
    required: usize,
    tol_map: f64,
    mut f: impl FnMut(&BoundaryFields) -> Result<([f64; K], [f64; 3])>,
) -> Result<Pass<K>> {
    let n = grid.dim();
    let mut sums: [PairwiseAccumulator; K] = std::array::from_fn(|_| PairwiseAccumulator::new());
    let mut curvature: Vec<PairwiseAccumulator> = (0..n).map(|_| PairwiseAccumulator::new()).collect();
    let mut volume = PairwiseAccumulator::new();
    let mut maxima = [f64::NEG_INFINITY; 3];
    let mut cone = ConeReport { required, min_margin: f64::INFINITY, flagged_nodes: Vec::new(), flagged_count: 0 };
    for (i, s) in grid.samples().enumerate() {
        let sig =
            if required == n - 1 { elementary_symmetric_of(&s.shape.eigenvalues()) } else { low_sigmas(&s.shape) };
        for (a, v) in curvature.iter_mut().zip(&sig) {
            a.add(s.weight * v);
        }
        volume.add(s.weight * dot(&s.position, &s.normal));
        let margin = sig[1..=required].iter().copied().fold(f64::INFINITY, f64::min);
        cone.min_margin = cone.min_margin.min(margin);
        if !(margin > 0.0) {
            cone.flagged_count += 1;
            if cone.flagged_nodes.len() < MAX_FLAGGED {
                cone.flagged_nodes.push(i);
            }
        }
        if let Some(p) = p {
            let fields = BoundaryFields::new(i, &s, p, tol_map)?;
            let (terms, extra) = f(&fields)?;
            for (a, v) in sums.iter_mut().zip(terms) {
                a.add(s.weight * v);
            }
            for (m, v) in maxima.iter_mut().zip(extra) {
                *m = m.max(v);
            }
        }
    }
    Ok(Pass {
        sums: sums.map(|a| a.total()),
        maxima,
        volume: volume.total() / n as f64,
        curvature: curvature.into_iter().map(|a| a.total()).collect(),
        cone,
    })
}

/// `σ_0..=σ_3` from the power sums `tr(L^j)` by Newton's identities.
fn low_sigmas(l: &SymMatrix<f64>) -> Vec<f64> {
    let p1 = l.trace();
    let p2 = l.trace_product(l);
    let n = l.dim();
    let d = l.as_slice();
    // tr L³ = Σ_ij L_ij (L²)_ij, and (L²)_ij is the dot of rows i and j
    let mut p3 = 0.0;
    for i in 0..n {
        let ri = &d[i * n..(i + 1) * n];
        p3 += ri[i] * dot(ri, ri);
        for j in i + 1..n {
            p3 += 2.0 * ri[j] * dot(ri, &d[j * n..(j + 1) * n]);
        }
    }
    vec![1.0, p1, 0.5 * (p1 * p1 - p2), (p1 * p1 * p1 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0]
}

fn validate(spec: &DomainSpec, p: Option<&Potential>, grid: &QuadratureGrid) -> Result<ReportProvenance> {
    if grid.spec() != spec {
        return Err(Error::Domain("quadrature grid was built for a different domain".into()));
    }
    match p {
        Some(p) => {
            check_same_domain(grid, p)?;
            Ok(p.provenance().into())
        }
        None => Ok(ReportProvenance::GeometryOnly),
    }
}

struct Draft {
    id: &'static str,
    tol: f64,
    provenance: ReportProvenance,
    links: Vec<Link>,
    residuals: BTreeMap<String, f64>,
    intermediates: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Draft {
    fn new(id: &'static str, tol: f64, provenance: ReportProvenance) -> Self {
        Self {
            id,
            tol,
            provenance,
            links: Vec::new(),
            residuals: BTreeMap::new(),
            intermediates: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn link(&mut self, name: &str, left: f64, right: f64, reference: f64) {
        self.links.push(Link::new(name, left, right, self.tol, reference));
    }

    fn put(&mut self, name: &str, value: f64) {
        self.intermediates.insert(name.into(), value);
    }

    fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.into(), value);
    }

    fn finish(mut self, lhs: f64, rhs: f64, grid: &QuadratureGrid, cone: ConeReport) -> CheckReport {
        if cone.flagged_count > 0 {
            self.notes.push(format!(
                "boundary leaves the cone Gamma_{}^+ at {} of {} nodes",
                cone.required,
                cone.flagged_count,
                grid.len()
            ));
        }
        if self.provenance == ReportProvenance::SemiDiscrete {
            self.notes
                .push("semi-discrete Hessian is a regression estimate clamped to be positive semidefinite".into());
        }
        let mut report = CheckReport {
            id: self.id.into(),
            lhs,
            rhs,
            ratio: rhs / lhs,
            links: self.links,
            residuals: self.residuals,
            intermediates: self.intermediates,
            quadrature: QuadratureInfo { order: grid.order(), nodes: grid.len() },
            provenance: self.provenance,
            verdict: Verdict::Holds,
            tolerance: self.tol,
            cone,
            notes: self.notes,
        };
        report.verdict = report.derive_verdict();
        report
    }
}

/// Chain for `Vol^{(n−2)/n} ≤ c₁∫H`. Without a potential only the outer
/// inequality is checked.
pub fn check_af1(
    spec: &DomainSpec,
    p: Option<&Potential>,
    grid: &QuadratureGrid,
    cfg: &CheckConfig,
) -> Result<CheckReport> {
    let provenance = validate(spec, p, grid)?;
    let n = spec.dim();
    let pass = run_pass(grid, p, 2.min(n - 1), cfg.tol_map, |f| {
        Ok((second_order_terms(f)?, [f.frame_split_residual(), 0.0, 0.0]))
    })?;
    let nf = n as f64;
    let c1 = omega(n).powf(-2.0 / nf) / (nf * (nf - 1.0));
    let h = pass.curvature[1];
    let lhs = pass.volume.powf((nf - 2.0) / nf);
    let rhs = c1 * h;
    let mut d = Draft::new("af1", cfg.tolerance(provenance), provenance);
    d.put("volume", pass.volume);
    d.put("mean_curvature_integral", h);
    d.put("constant", c1);
    if p.is_some() {
        use second::*;
        let t = &pass.sums;
        let scale = h.abs();
        d.link("volume_to_boundary_term", lhs, c1 * t[BOUNDARY], lhs);
        d.link("boundary_term_to_refined", c1 * t[BOUNDARY], c1 * (h - t[T1L] / 3.0), rhs);
        d.link("refined_to_mean_curvature", c1 * (h - t[T1L] / 3.0), rhs, rhs);
        d.link("m21_bound", t[M21], 2.0 / 3.0 * t[T1L], scale);
        d.link("normal_defect_nonpositive", t[NORMAL_DEFECT], 0.0, scale);
        for (name, i) in [
            ("boundary_term", BOUNDARY),
            ("l21", L21),
            ("l22", L22),
            ("l21_by_parts", L21_BY_PARTS),
            ("m21", M21),
            ("m22", M22),
            ("t1l_energy", T1L),
            ("laplacian_integral", LAPLACIAN),
            ("normal_defect", NORMAL_DEFECT),
            ("j1", J[0]),
            ("j1_rhs", J_RHS[0]),
            ("j2", J[1]),
            ("j2_rhs", J_RHS[1]),
        ] {
            d.put(name, t[i]);
        }
        d.residual("l_sum", (t[L21] + t[L22] - t[BOUNDARY]).abs() / scale);
        d.residual("l21_by_parts", (t[L21] - t[L21_BY_PARTS]).abs() / scale);
        d.residual("m22_identity", (t[M22] + t[T1L] - h).abs() / scale);
        d.residual("mean_curvature_quadrature", (t[MEAN_CURVATURE] - h).abs() / scale);
        d.residual("laplacian_integral", t[LAPLACIAN].abs() / scale);
        d.residual("j1_recursion", (t[J[0]] - t[J_RHS[0]]).abs() / scale);
        d.residual("j2_recursion", (t[J[1]] - t[J_RHS[1]]).abs() / scale);
        d.residual("frame_split", pass.maxima[0]);
    } else {
        d.link("volume_to_mean_curvature", lhs, rhs, lhs);
    }
    d.notes.push("residuals are relative to the mean curvature integral, except frame_split (max entry)".into());
    Ok(d.finish(lhs, rhs, grid, pass.cone))
}

/// Chain for `Vol^{(n−3)/n} ≤ c₂∫σ₂(L)` together with the sub-claims on the
/// third-order normal defect, the mixed E-terms and the P-weighted terms.
pub fn check_af2(
    spec: &DomainSpec,
    p: Option<&Potential>,
    grid: &QuadratureGrid,
    cfg: &CheckConfig,
) -> Result<CheckReport> {
    let provenance = validate(spec, p, grid)?;
    let n = spec.dim();
    if n < 3 {
        return domain(format!("af2 needs dimension at least 3, got {n}"));
    }
    let series = Series::new(cfg.series)?;
    let pass = run_pass(grid, p, 3.min(n - 1), cfg.tol_map, |f| {
        let (terms, [mixed_min, self_min]) = third_order_terms(f, &series)?;
        Ok((terms, [f.frame_split_residual(), -mixed_min, -self_min]))
    })?;
    let nf = n as f64;
    let c2 = omega(n).powf(-3.0 / nf) / (3.0 * binomial(n, 3));
    let s2 = pass.curvature[2];
    let lhs = pass.volume.powf((nf - 3.0) / nf);
    let rhs = c2 * s2;
    let mut d = Draft::new("af2", cfg.tolerance(provenance), provenance);
    if n == 3 {
        d.notes.push("boundary case n = 3: sigma_2(L) is the Gauss curvature and the mixed T_2 terms vanish".into());
    }
    d.put("volume", pass.volume);
    d.put("sigma2_integral", s2);
    d.put("constant", c2);
    if p.is_some() {
        use third::*;
        let t = &pass.sums;
        let scale = s2.abs();
        let bt = t[BOUNDARY];
        d.link("volume_to_boundary_term", lhs, c2 * bt, lhs);
        d.link("boundary_term_to_refined", c2 * bt, c2 * (s2 - t[T2L] / 4.0), rhs);
        d.link("refined_to_sigma2", c2 * (s2 - t[T2L] / 4.0), rhs, rhs);
        d.link("normal_defect_nonpositive", t[NORMAL_DEFECT], 0.0, scale);
        d.link("mixed_e_terms_bound", t[E12] + t[E21], -0.5 * t[T2_AMBIENT_L], scale);
        d.link("mixed_ambient_energy_nonnegative", -0.5 * t[T2_AMBIENT_L], 0.0, scale);
        d.link("p_weighted_bound", t[P_WEIGHTED], -0.25 * t[T2L], scale);
        d.link("e_terms_bound", t[E1] + t[E2] + t[E3], -0.25 * t[T2L], scale);
        // eigenvalue floors for the positivity the chain relies on
        let floor = cfg.tol_map.max(1e-10) * (1.0 + scale);
        d.link("t2_mixed_psd", pass.maxima[1], floor, 0.0);
        d.link("t2_ambient_psd", pass.maxima[2], floor, 0.0);
        for (name, i) in [
            ("boundary_term", BOUNDARY),
            ("l31", L31),
            ("l32", L32),
            ("l33", L33),
            ("m31", M31),
            ("m32", M32_BY_PARTS),
            ("m32_direct", M32),
            ("m33", M33),
            ("e1", E1),
            ("e2", E2),
            ("e3", E3),
            ("e11", E11),
            ("e12", E12),
            ("e13", E13),
            ("e21", E21),
            ("e22", E22),
            ("t2l_energy", T2L),
            ("t2_ambient_mixed_energy", T2_AMBIENT_L),
            ("p_weighted", P_WEIGHTED),
            ("normal_defect", NORMAL_DEFECT),
            ("a1", A[0]),
            ("a1_rhs", A_RHS[0]),
            ("a2", A[1]),
            ("a2_rhs", A_RHS[1]),
        ] {
            d.put(name, t[i]);
        }
        d.put("t2_mixed_min_eigenvalue", -pass.maxima[1]);
        d.put("t2_ambient_min_eigenvalue", -pass.maxima[2]);
        let m_sum = t[M31] + t[M32_BY_PARTS] + t[M33];
        d.residual("l_sum", (t[L31] + t[L32] + t[L33] - bt).abs() / scale);
        d.residual("m_decomposition", (m_sum - s2 - t[E1] - t[E2] - t[E3]).abs() / scale);
        d.residual("m32_codazzi", (t[M32] - t[M32_BY_PARTS]).abs() / scale);
        d.residual("codazzi_form", (t[CODAZZI_DIRECT] - t[CODAZZI_FORM]).abs() / scale);
        d.residual("sigma2_quadrature", (t[SIGMA2_L] - s2).abs() / scale);
        d.residual("mixed_trace_integral", t[MIXED_TRACE].abs() / scale);
        d.residual("sigma2_hessian_vs_ricci", (t[SIGMA2_HESS] - t[HALF_RICCI]).abs() / scale);
        d.residual("e1_split", (t[E11] + t[E12] + t[E13] - t[E1]).abs() / scale);
        d.residual("e2_split", (t[E21] + t[E22] - t[E2]).abs() / scale);
        d.residual("p_terms", (t[E13] + t[E22] + t[E3] - t[P_WEIGHTED]).abs() / scale);
        d.residual("a1_recursion", (t[A[0]] - t[A_RHS[0]]).abs() / scale);
        d.residual("a2_recursion", (t[A[1]] - t[A_RHS[1]]).abs() / scale);
        d.residual("frame_split", pass.maxima[0]);
    } else {
        d.link("volume_to_sigma2", lhs, rhs, lhs);
    }
    d.notes.push("residuals are relative to the sigma_2 integral, except frame_split (max entry)".into());
    Ok(d.finish(lhs, rhs, grid, pass.cone))
}

/// `(V_{l+1}/ω_{l+1})^{1/(l+1)} ≤ (V_l/ω_l)^{1/l}` for `l = 1..n−1`, with `V_l`
/// the normalized quermassintegrals. The report's ratio is the smallest link ratio.
pub fn check_af_family(spec: &DomainSpec, grid: &QuadratureGrid, cfg: &CheckConfig) -> Result<CheckReport> {
    validate(spec, None, grid)?;
    let n = spec.dim();
    let pass = run_pass::<0>(grid, None, n - 1, cfg.tol_map, |_| Ok(([], [0.0; 3])))?;
    let v = |l: usize| if l == n { pass.volume } else { quermass_from_integrals(n, l, &pass.curvature) };
    let radius = |l: usize| (v(l) / omega(l)).powf(1.0 / l as f64);
    let mut d = Draft::new("af_family", cfg.tolerance(ReportProvenance::GeometryOnly), ReportProvenance::GeometryOnly);
    for l in 1..=n {
        d.put(&format!("v{l}"), v(l));
    }
    for l in 1..n {
        d.link(&format!("v{}_to_v{}", l + 1, l), radius(l + 1), radius(l), 0.0);
    }
    let worst =
        d.links.iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio)).map(|l| (l.left, l.right)).unwrap_or((1.0, 1.0));
    Ok(d.finish(worst.0, worst.1, grid, pass.cone))
}
