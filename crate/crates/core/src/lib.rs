//! Numerical solver for the Orlicz-Aleksandrov problem via a
//! Gauss-curvature-type flow of convex bodies in the plane and in space.
//!
//! Bodies are represented by their support function sampled on a grid of the
//! unit circle (`n = 2`) or the unit sphere (`n = 3`). The flow
//!
//! ```text
//! ∂h/∂t = h − g · rⁿ 𝒦 / φ(r)
//! ```
//!
//! drives a uniformly convex body toward a solution of
//! `h φ(r) det(∇²h + hI) / rⁿ = g` when the data `(φ, g)` are admissible.

pub mod commands;
pub mod config;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod phi;
pub mod spectral;

pub use curvature::{
    curvature_report, gauss_curvature, integral_curvature_density, orlicz_density, principal_radii,
    radial_gauss_image_measure, total_integral_curvature, CurvatureReport, PrincipalRadii,
};
pub use error::{Error, Result};
pub use flow::{
    dissipation, dual_flow_residual, flow_speed, functional_f, functional_f_direct, ma_residual,
    radial_speed_check, run, step, Bounds, FlowConfig, FlowProblem, FlowState, FlowTrace, PhiArgMode,
    StepRecord, Termination,
};
pub use geometry::{
    embedding, jac_alpha, jac_alpha_star, polar_body, radial_eval, radial_gauss_map, radial_norm_field,
    reverse_radial_gauss, validate, ConvexBody, ConvexityReport,
};
pub use grid::{build_grid, integrate, spherical_gradient, spherical_hessian, Point, ScalarField, SphereGrid, Sym2};
pub use phi::{
    check_solvability, check_uniqueness_condition, PhiKind, PhiModel, PhiTable, SolvabilityReport,
    UniquenessReport,
};

/// Environment variable capping the data-parallel width.
pub const THREADS_ENV: &str = "ORLICZ_FLOW_THREADS";

/// Sizes the global thread pool from `ORLICZ_FLOW_THREADS` when it is set to a
/// positive integer. Returns the configured width, if any.
pub fn init_threads_from_env() -> Option<usize> {
    let n = std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok()?;
    Some(n)
}
