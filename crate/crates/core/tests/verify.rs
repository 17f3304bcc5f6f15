use quermass::geometry::{boundary_point, curvature_integrals, DomainSpec, Monomial, QuadratureGrid, RadialFunction};
use quermass::series::SeriesConfig;
use quermass::transport::{
    closed_form_potential, default_smoothing_radius, potential_from_weights, semidiscrete_solve, Potential,
};
use quermass::verify::*;
use statrs::function::gamma::gamma;

fn omega(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
}

fn binom(n: usize, k: usize) -> f64 {
    statrs::function::factorial::binomial(n as u64, k as u64)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn setup(spec: &DomainSpec, order: usize) -> (Potential, QuadratureGrid, Vec<BoundaryFields>) {
    let p = closed_form_potential(spec).unwrap();
    let grid = QuadratureGrid::new(spec, order).unwrap();
    let fields = boundary_fields(&grid, &p).unwrap();
    (p, grid, fields)
}

fn series() -> SeriesConfig<f64> {
    CheckConfig::default().series
}

#[test]
fn ball_fields_are_normal_dilations() {
    let r = 1.5;
    let (_, _, fields) = setup(&DomainSpec::ball(4, r).unwrap(), 8);
    for f in &fields {
        assert!(f.grad_norm() < 1e-14);
        assert!((f.phi_n - 1.0).abs() < 1e-14 && (f.psi - 1.0).abs() < 1e-14);
        let a = f.a();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (3, 3) { 1.0 / r } else { 0.0 };
                assert!((a.get(i, j) - expected).abs() < 1e-14);
            }
        }
        // B = diag(L φ_n, 0) with L = I/R
        let b = f.b();
        assert!((b.get(0, 0) - 1.0 / r).abs() < 1e-14 && b.get(3, 3) == 0.0);
    }
}

#[test]
fn frame_split_reassembles_the_hessian() {
    let (_, _, fields) = setup(&DomainSpec::ellipsoid(&[1.0, 1.7, 0.6, 1.2]).unwrap(), 8);
    for f in &fields {
        assert_eq!(f.b().get(3, 3), 0.0);
        assert!(f.frame_split_residual() <= 1e-10);
        let g2 = f.grad_norm().powi(2) + f.phi_n * f.phi_n;
        assert!(g2 <= 1.0 + 1e-12);
        assert!((f.a().add(&f.b()).max_abs_diff(&f.framed_hessian)) <= 1e-10);
    }
}

#[test]
fn ellipsoid_axis_point_fields_follow_the_chain_rule() {
    let axes = [1.3, 0.8, 2.1];
    let spec = DomainSpec::ellipsoid(&axes).unwrap();
    let p = closed_form_potential(&spec).unwrap();
    // at x = a₁e₁: ν = e₁, ∇̄φ = e₁, principal curvatures a₁/a_j², ∇̄²φ = diag(1/a_j)
    let s = boundary_point(&spec, &[1.0, 0.0, 0.0]);
    let f = BoundaryFields::new(0, &s, &p, DEFAULT_TOL_MAP).unwrap();
    assert!((f.phi_n - 1.0).abs() < 1e-14 && f.grad_norm() < 1e-14);
    for a in 0..2 {
        for b in 0..2 {
            let (ta, tb) = (s.tangent(a), s.tangent(b));
            let want: f64 = (0..3).map(|j| ta[j] * tb[j] * (1.0 / axes[j] - axes[0] / (axes[j] * axes[j]))).sum();
            assert!((f.hess.get(a, b) - want).abs() < 1e-13);
        }
    }
    assert!((f.framed_hessian.get(2, 2) - 1.0 / axes[0]).abs() < 1e-14);
    // an off-axis point: ∇φ = tangential part of (x_i/a_i)
    let s = boundary_point(&spec, &[0.6, 0.0, 0.8]);
    let f = BoundaryFields::new(0, &s, &p, DEFAULT_TOL_MAP).unwrap();
    let g: Vec<f64> = (0..3).map(|i| s.position[i] / axes[i]).collect();
    for a in 0..2 {
        let t = s.tangent(a);
        assert!((f.grad[a] - (0..3).map(|j| t[j] * g[j]).sum::<f64>()).abs() < 1e-14);
    }
    assert!((f.phi_n - (0..3).map(|j| s.normal[j] * g[j]).sum::<f64>()).abs() < 1e-14);
}

#[test]
fn fields_reject_maps_leaving_the_unit_ball() {
    let p = closed_form_potential(&DomainSpec::ball(3, 1.0).unwrap()).unwrap();
    // a node just outside the unit sphere, inside the domain slack, maps to |∇̄φ| = 1 + 5e−10
    let s = boundary_point(&DomainSpec::ball(3, 1.0 + 5e-10).unwrap(), &[0.0, 0.0, 1.0]);
    assert!(BoundaryFields::new(7, &s, &p, DEFAULT_TOL_MAP).is_ok());
    match BoundaryFields::new(7, &s, &p, 1e-12) {
        Err(quermass::Error::InvariantViolation { node, .. }) => assert_eq!(node, 7),
        other => panic!("expected an invariant violation, got {other:?}"),
    }
    let grid = QuadratureGrid::new(&DomainSpec::ball(3, 2.0).unwrap(), 6).unwrap();
    assert!(boundary_fields(&grid, &p).is_err());
}

#[test]
fn ball_boundary_terms_match_closed_forms() {
    for n in 3..=5 {
        for r in [0.7, 1.6] {
            let spec = DomainSpec::ball(n, r).unwrap();
            let (p, grid, _) = setup(&spec, 16);
            let nf = n as f64;
            let want1 = nf * (nf - 1.0) * omega(n) * r.powi(n as i32 - 2);
            let want2 = 3.0 * binom(n, 3) * omega(n) * r.powi(n as i32 - 3);
            assert!(rel(boundary_term(&grid, &p, 1).unwrap(), want1) <= 1e-8, "n={n} R={r}");
            assert!(rel(boundary_term(&grid, &p, 2).unwrap(), want2) <= 1e-8, "n={n} R={r}");
        }
    }
    let (p, grid, _) = setup(&DomainSpec::ball(3, 1.0).unwrap(), 6);
    assert!(boundary_term(&grid, &p, 3).is_err());
}

#[test]
fn decompositions_sum_to_boundary_terms() {
    for axes in [vec![1.0, 1.5, 2.0], vec![1.0, 1.2, 1.5, 2.0]] {
        let spec = DomainSpec::ellipsoid(&axes).unwrap();
        let (p, grid, fields) = setup(&spec, 32);
        let bt1 = boundary_term(&grid, &p, 1).unwrap();
        let bt2 = boundary_term(&grid, &p, 2).unwrap();
        let l2 = l_decomposition_2(&fields).unwrap();
        let l3 = l_decomposition_3(&fields, &series()).unwrap();
        assert!(rel(l2.l21 + l2.l22, bt1) <= 1e-7);
        assert!(rel(l3.l31 + l3.l32 + l3.l33, bt2) <= 1e-7);
        assert!((l2.l21 - l2.l21_by_parts).abs() <= 1e-6 * bt1.abs());
        assert!([l3.l31, l3.l32, l3.l33].iter().all(|v| v.is_finite()));
    }
}

#[test]
fn second_order_m_identity_and_claim() {
    let spec = DomainSpec::ellipsoid(&[1.0, 1.4, 2.2]).unwrap();
    let (p, grid, fields) = setup(&spec, 32);
    let m = m_functionals_2(&fields).unwrap();
    let h = curvature_integrals(&spec, 32).unwrap()[1];
    assert!((m.m22 + m.t1l_energy - h).abs() <= 1e-10 * h);
    assert!(m.m21 <= 2.0 / 3.0 * m.t1l_energy + 1e-8 * h);
    let r = check_af1(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert!(r.intermediates["normal_defect"] <= 1e-8);
    assert!(r.residuals["laplacian_integral"] <= 1e-8);
}

#[test]
fn ball_functionals_reduce_to_curvature_integrals() {
    let spec = DomainSpec::ball(4, 1.3).unwrap();
    let (_, _, fields) = setup(&spec, 12);
    let ints = curvature_integrals(&spec, 12).unwrap();
    let l2 = l_decomposition_2(&fields).unwrap();
    let m2 = m_functionals_2(&fields).unwrap();
    assert!(l2.l21.abs() < 1e-12 && rel(l2.l22, ints[1]) < 1e-12);
    assert!(m2.m21.abs() < 1e-12 && rel(m2.m22, ints[1]) < 1e-12 && m2.t1l_energy.abs() < 1e-12);
    let l3 = l_decomposition_3(&fields, &series()).unwrap();
    let m3 = m_functionals_3(&fields, &series()).unwrap();
    assert!(l3.l31.abs() < 1e-12 && l3.l32.abs() < 1e-12 && rel(l3.l33, ints[2]) < 1e-12);
    assert!(m3.m31.abs() < 1e-12 && m3.m32.abs() < 1e-12 && rel(m3.m33, ints[2]) < 1e-12);
    assert!([m3.e1, m3.e2, m3.e3, m3.t2l_energy].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn scaled_potentials_are_quadratic_in_the_scale() {
    for spec in [DomainSpec::ball(3, 1.0).unwrap(), DomainSpec::ellipsoid(&[1.0, 1.5, 0.8]).unwrap()] {
        let (p, grid, base) = setup(&spec, 16);
        let l = l_decomposition_2(&base).unwrap();
        for c in [0.3, 0.75] {
            let f = boundary_fields(&grid, &p.scaled(c).unwrap()).unwrap();
            let lc = l_decomposition_2(&f).unwrap();
            assert!((lc.l21 - c * c * l.l21).abs() <= 1e-12 * l.l22.abs());
            assert!(rel(lc.l22, c * c * l.l22) <= 1e-12);
        }
    }
}

#[test]
fn third_order_decomposition_and_e_bound() {
    for axes in [vec![1.0, 1.3, 2.0], vec![1.0, 1.0, 1.0, 2.0], vec![0.8, 1.1, 1.5, 2.2]] {
        let spec = DomainSpec::ellipsoid(&axes).unwrap();
        let (_, _, fields) = setup(&spec, 32);
        let s2 = curvature_integrals(&spec, 32).unwrap()[2];
        let m = m_functionals_3(&fields, &series()).unwrap();
        let resid = (m.m31 + m.m32 + m.m33 - s2 - m.e1 - m.e2 - m.e3).abs();
        assert!(resid <= 1e-7 * s2, "{axes:?}: {resid:e}");
        assert!(m.e1 + m.e2 + m.e3 <= -0.25 * m.t2l_energy + 1e-8, "{axes:?}");
        assert!((m.m32 - m.m32_direct).abs() <= 1e-5 * s2);
    }
}

#[test]
fn recursions_on_balls_and_ellipsoids() {
    let (_, _, ball) = setup(&DomainSpec::ball(3, 1.0).unwrap(), 8);
    assert!(jk_recursion_residual(&ball, 1).unwrap() < 1e-14);
    assert!(jk_recursion_residual(&ball, 0).is_err());
    let spec = DomainSpec::ellipsoid(&[1.0, 1.6, 2.3]).unwrap();
    let scale = curvature_integrals(&spec, 24).unwrap()[1];
    let (_, _, f24) = setup(&spec, 24);
    assert!(jk_recursion_residual(&f24, 1).unwrap() <= 1e-5 * scale);
    // the k = 2 residual shrinks under refinement
    let coarse = jk_recursion_residual(&setup(&spec, 8).2, 2).unwrap();
    let fine = jk_recursion_residual(&setup(&spec, 32).2, 2).unwrap();
    assert!(fine < 0.1 * coarse.max(1e-300) || fine < 1e-10 * scale, "{coarse:e} -> {fine:e}");
    let (_, _, f4) = setup(&DomainSpec::ellipsoid(&[1.0, 1.3, 1.6, 2.0]).unwrap(), 24);
    assert!(ak_recursion_residual(&f4, 1).unwrap() <= 1e-5);
}

#[test]
fn p_pointwise_examples() {
    let cfg = series();
    assert!((p_pointwise(0.0, 0.0, &cfg).unwrap() + 1.5).abs() < 1e-15);
    assert!((p_pointwise(0.0, 1.0, &cfg).unwrap() + 0.25).abs() < 1e-15);
    assert!(p_pointwise(0.5, 0.9, &cfg).is_err());
}

#[test]
fn af1_is_sharp_on_balls() {
    let spec = DomainSpec::ball(4, 1.0).unwrap();
    let (p, grid, _) = setup(&spec, 16);
    let r = check_af1(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::EqualityWithinTol);
    for l in &r.links[..3] {
        assert!((l.ratio - 1.0).abs() <= 1e-8, "{}: {}", l.name, l.ratio);
    }
}

#[test]
fn af1_is_strict_on_a_prolate_ellipsoid() {
    let spec = DomainSpec::ellipsoid(&[1.0, 1.0, 2.0]).unwrap();
    let (p, grid, _) = setup(&spec, 32);
    let r = check_af1(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(r.ratio > 1.0);
    assert!(r.links.iter().all(|l| l.holds));
    assert!(r.residuals.values().all(|&v| v <= 1e-6), "{:?}", r.residuals);
}

#[test]
fn af2_is_sharp_on_balls() {
    let spec = DomainSpec::ball(5, 1.0).unwrap();
    let (p, grid, _) = setup(&spec, 24);
    let r = check_af2(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::EqualityWithinTol);
    for l in &r.links[..3] {
        assert!((l.ratio - 1.0).abs() <= 1e-8, "{}: {}", l.name, l.ratio);
    }
}

#[test]
fn af2_is_strict_on_a_prolate_ellipsoid() {
    let spec = DomainSpec::ellipsoid(&[1.0, 1.0, 1.0, 2.0]).unwrap();
    let (p, grid, _) = setup(&spec, 32);
    let r = check_af2(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(r.ratio > 1.0);
    for l in &r.links {
        assert!(l.holds, "{l:?}");
    }
}

#[test]
fn af2_flags_the_three_dimensional_boundary_case() {
    // every link is an equality when n = 3, so the order must resolve it
    let spec = DomainSpec::ellipsoid(&[1.0, 1.2, 1.5]).unwrap();
    let (p, grid, _) = setup(&spec, 32);
    let r = check_af2(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("boundary case")));
    assert!(r.verdict.is_success());
    assert!(check_af2(
        &DomainSpec::ball(2, 1.0).unwrap(),
        None,
        &QuadratureGrid::new(&DomainSpec::ball(2, 1.0).unwrap(), 8).unwrap(),
        &CheckConfig::default()
    )
    .is_err());
}

#[test]
fn dented_domain_degrades_the_verdict() {
    // ρ = 1 − u₁²/2 dimples inward at both poles, so σ₃(L) < 0 there
    let mut powers = vec![0; 4];
    powers[0] = 2;
    let rho = RadialFunction { base: 1.0, terms: vec![Monomial { coeff: -0.5, powers }] };
    let spec = DomainSpec::radial_graph(4, rho, None).unwrap();
    let grid = QuadratureGrid::new(&spec, 12).unwrap();
    let r = check_af2(&spec, None, &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Degraded);
    assert!(r.cone.flagged_count > 0 && !r.cone.flagged_nodes.is_empty());
    assert!(r.cone.min_margin < 0.0);
}

#[test]
fn semi_discrete_perturbed_circle_satisfies_af1() {
    let spec = DomainSpec::perturbed_sphere(2, 0.1, 0.3).unwrap();
    let w = semidiscrete_solve(&spec, 2000, 1e-9, 3).unwrap();
    let p = potential_from_weights(&w, default_smoothing_radius(&w)).unwrap();
    let grid = QuadratureGrid::new(&spec, 64).unwrap();
    let r = check_af1(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.provenance, ReportProvenance::SemiDiscrete);
    assert_eq!(r.tolerance, SEMI_DISCRETE_TOL);
    assert!(r.verdict.is_success(), "{:?}", r.links);
    assert!(r.notes.iter().any(|n| n.contains("clamp")));
}

#[test]
fn af_family_holds_on_ellipsoids() {
    let spec = DomainSpec::ellipsoid(&[1.0, 1.5, 2.5, 0.9]).unwrap();
    let grid = QuadratureGrid::new(&spec, 24).unwrap();
    let r = check_af_family(&spec, &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.links.len(), 3);
}

#[test]
fn reports_serialize_with_stable_field_names() {
    let spec = DomainSpec::ellipsoid(&[1.0, 1.2, 1.4]).unwrap();
    let (p, grid, _) = setup(&spec, 8);
    let r = check_af1(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    for key in ["id", "lhs", "rhs", "ratio", "links", "residuals", "quadrature", "provenance", "verdict"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["provenance"], "closed_form");
    let again = check_af1(&spec, Some(&p), &grid, &CheckConfig::default()).unwrap();
    assert_eq!(r.to_json().unwrap(), again.to_json().unwrap());
    let back: CheckReport = serde_json::from_value(v).unwrap();
    assert_eq!(back.derive_verdict(), r.verdict);
}
