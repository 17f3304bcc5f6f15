//! Smooth star-shaped domains, boundary quadrature and curvature integrals.

mod domain;
mod measures;
mod quadrature;
mod steiner;

pub use domain::{DomainSpec, Family, ImplicitEval, Monomial, RadialFunction, MAX_DOMAIN_DIM, MIN_DIM};
pub(crate) use measures::{binomial, omega};
pub use measures::{
    curvature_integrals, quermass_from_integrals, quermassintegral, ricci_from_gauss, steiner_coefficients,
    surface_area, unit_ball_volume, volume,
};
pub use quadrature::{
    boundary_point, boundary_quadrature, frame_with_normal, gauss_legendre, BoundarySample, QuadratureGrid, SphereRule,
    MAX_ORDER, MIN_ORDER,
};
pub use steiner::{distance_to_convex, steiner_fit, steiner_volume, SteinerEstimate, SteinerFit};
