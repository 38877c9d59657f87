//! Principal radii, Gauss curvature and the integral / Orlicz curvature densities.
//!
//! Every density is a functional of the support field it is handed. The
//! integral curvature of a body `K` itself is the density of its polar body:
//! feed `polar_body(K)` when the measure of `K` is wanted.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, RadialSampler};
use crate::grid::{par_map, quadrature, ScalarField};
use crate::phi::PhiModel;

/// Eigenvalues of `b = ∇²h + hI` at every node, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalRadii {
    dim: usize,
    values: Vec<[f64; 2]>,
}

impl PrincipalRadii {
    /// The `n − 1` radii at node `k`.
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k][..self.dim - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v[self.dim - 2])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub gauss: ScalarField,
    pub principal_radii: PrincipalRadii,
    /// Sum of the principal curvatures.
    pub mean_curvature: ScalarField,
    /// Integral-curvature density `h det(b)/rⁿ`.
    pub density: ScalarField,
}

pub fn principal_radii(body: &ConvexBody) -> PrincipalRadii {
    let dim = body.dim();
    PrincipalRadii {
        dim,
        values: par_map(body.grid().len(), |k| body.local(k).b.eigenvalues(dim)),
    }
}

/// `𝒦 = 1/det(∇²h + hI)`.
pub fn gauss_curvature(body: &ConvexBody) -> Result<ScalarField> {
    let dets = par_map(body.grid().len(), |k| body.local(k).det_b);
    if let Some((node, &det)) = dets.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::NotConvex { margin: det, node });
    }
    Ok(ScalarField::from_parts_unchecked(
        body.grid().clone(),
        dets.into_iter().map(|d| 1.0 / d).collect(),
    ))
}

/// `h det(∇²h + hI) / (|∇h|² + h²)^{n/2} = h/(rⁿ𝒦)`.
pub fn integral_curvature_density(body: &ConvexBody) -> ScalarField {
    let dim = body.dim();
    let values = par_map(body.grid().len(), |k| {
        let loc = body.local(k);
        loc.h * loc.det_b / loc.r_pow_n(dim)
    });
    ScalarField::from_parts_unchecked(body.grid().clone(), values)
}

/// `φ(1/h) · h det(b)/rⁿ`.
pub fn orlicz_density(body: &ConvexBody, phi: &PhiModel) -> Result<ScalarField> {
    let base = integral_curvature_density(body);
    let values = body
        .values()
        .iter()
        .zip(base.values())
        .map(|(&h, &d)| phi.eval(1.0 / h).map(|p| p * d))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarField::from_parts_unchecked(body.grid().clone(), values))
}

/// Quadrature of the integral-curvature density; the full sphere measure for
/// any admissible body.
pub fn total_integral_curvature(body: &ConvexBody) -> f64 {
    quadrature(body.grid(), integral_curvature_density(body).values())
}

pub fn curvature_report(body: &ConvexBody) -> Result<CurvatureReport> {
    let gauss = gauss_curvature(body)?;
    let principal_radii = principal_radii(body);
    let mean = (0..principal_radii.len())
        .map(|k| principal_radii.at(k).iter().map(|r| 1.0 / r).sum())
        .collect();
    Ok(CurvatureReport {
        gauss,
        principal_radii,
        mean_curvature: ScalarField::from_parts_unchecked(body.grid().clone(), mean),
        density: integral_curvature_density(body),
    })
}

/// Length of the normal arc `{x(ξ) : ξ from ξ_start counter-clockwise to ξ_end}`
/// on the circle, from the reverse radial Gauss map at the arc ends.
pub fn radial_gauss_image_measure(body: &ConvexBody, start: f64, end: f64) -> Result<f64> {
    if body.dim() != 2 {
        return Err(Error::RequiresPlane(body.dim()));
    }
    let span = end - start;
    if span >= TAU {
        return Ok(TAU);
    }
    if span <= 0.0 {
        return Ok(0.0);
    }
    let sampler = RadialSampler::new(body);
    let angle = |t: f64| {
        let x = sampler.maximize(&[t.cos(), t.sin(), 0.0]).normal;
        x[1].atan2(x[0])
    };
    let image = (angle(end) - angle(start)).rem_euclid(TAU);
    // the image of a nearly full arc can wrap to a tiny remainder
    if span > std::f64::consts::PI && image < span - std::f64::consts::PI {
        Ok(image + TAU)
    } else {
        Ok(image)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn balls() {
        let g2 = build_grid(2, 64).unwrap();
        let g3 = build_grid(3, 16).unwrap();
        let b2 = ConvexBody::ball(g2, 2.0).unwrap();
        let b3 = ConvexBody::ball(g3, 2.0).unwrap();
        for v in gauss_curvature(&b2).unwrap().values() {
            assert_eq!(*v, 0.5);
        }
        for v in gauss_curvature(&b3).unwrap().values() {
            assert_eq!(*v, 0.25);
        }
        let radii = principal_radii(&b3);
        assert_eq!(radii.at(10), &[2.0, 2.0]);
        for v in integral_curvature_density(&b3).values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn offset_circle_has_unit_radii() {
        let body = ConvexBody::offset_ball(build_grid(2, 128).unwrap(), 1.0, [0.3, 0.0, 0.0]).unwrap();
        let radii = principal_radii(&body);
        for k in 0..radii.len() {
            assert_abs_diff_eq!(radii.at(k)[0], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn orlicz_density_examples() {
        let g = build_grid(2, 64).unwrap();
        let unit = ConvexBody::ball(g.clone(), 1.0).unwrap();
        let phi = PhiModel::power(3.0);
        for v in orlicz_density(&unit, &phi).unwrap().values() {
            assert_eq!(*v, 1.0);
        }
        let two = ConvexBody::ball(g, 2.0).unwrap();
        for v in orlicz_density(&two, &PhiModel::reciprocal()).unwrap().values() {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn mean_curvature_of_sphere() {
        let body = ConvexBody::ball(build_grid(3, 16).unwrap(), 4.0).unwrap();
        let report = curvature_report(&body).unwrap();
        for v in report.mean_curvature.values() {
            assert_eq!(*v, 0.5);
        }
    }

    #[test]
    fn image_measure_of_ball_is_arc_length() {
        let body = ConvexBody::ball(build_grid(2, 256).unwrap(), 1.7).unwrap();
        for (a, b) in [(0.0, 1.0), (2.0, 5.5), (-1.0, 0.3)] {
            assert_abs_diff_eq!(radial_gauss_image_measure(&body, a, b).unwrap(), b - a, epsilon = 1e-12);
        }
        assert_eq!(radial_gauss_image_measure(&body, 0.0, TAU).unwrap(), TAU);
        let sphere = ConvexBody::ball(build_grid(3, 16).unwrap(), 1.0).unwrap();
        assert!(radial_gauss_image_measure(&sphere, 0.0, 1.0).is_err());
    }
}
