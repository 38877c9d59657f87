//! Convex bodies described by their support function, and the
//! support / radial / polar dictionary between them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{par_map, Point, ScalarField, SphereGrid, Sym2};

/// Pointwise differential data of a support function at one node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalGeometry {
    pub h: f64,
    pub grad: [f64; 2],
    /// `b = ∇²h + hI` (principal radii are its eigenvalues).
    pub b: Sym2,
    pub det_b: f64,
    /// `r = |X| = (|∇h|² + h²)^{1/2}`.
    pub r: f64,
}

impl LocalGeometry {
    #[inline]
    pub(crate) fn at(grid: &SphereGrid, h: &[f64], k: usize) -> Self {
        let (grad, hess) = grid.derivatives_at(h, k);
        let hk = h[k];
        let b = hess.shifted(grid.dim(), hk);
        let det_b = b.det(grid.dim());
        let r = (grad[0] * grad[0] + grad[1] * grad[1] + hk * hk).sqrt();
        LocalGeometry {
            h: hk,
            grad,
            b,
            det_b,
            r,
        }
    }

    #[inline]
    pub(crate) fn r_pow_n(&self, dim: usize) -> f64 {
        if dim == 2 {
            self.r * self.r
        } else {
            self.r * self.r * self.r
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub min_h: f64,
    pub min_h_node: usize,
    /// Smallest eigenvalue of `∇²h + hI` over the nodes.
    pub convexity_margin: f64,
    pub margin_node: usize,
}

impl ConvexityReport {
    pub fn accepted(&self) -> bool {
        self.min_h > 0.0 && self.convexity_margin > 0.0
    }
}

/// Positivity and uniform-convexity margins of an arbitrary support field.
pub fn validate(h: &ScalarField) -> ConvexityReport {
    let grid = h.grid();
    let dim = grid.dim();
    let margins = par_map(grid.len(), |k| {
        LocalGeometry::at(grid, h.values(), k)
            .b
            .min_eigenvalue(dim)
    });
    let (min_h_node, min_h) = argmin(h.values());
    let (margin_node, convexity_margin) = argmin(&margins);
    ConvexityReport {
        min_h,
        min_h_node,
        convexity_margin,
        margin_node,
    }
}

fn argmin(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, v)| if v < best.1 { (k, v) } else { best })
}

/// A uniformly convex body containing the origin, stored as its support function
/// on a sphere grid. Immutable; flows produce new bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    h: ScalarField,
    convexity_margin: f64,
}

impl ConvexBody {
    /// Validate `h` and wrap it. Degenerate fields are rejected, never clamped.
    pub fn new(h: ScalarField) -> Result<Self> {
        let report = validate(&h);
        if report.min_h <= 0.0 {
            return Err(Error::NonPositiveSupport {
                min_h: report.min_h,
                node: report.min_h_node,
            });
        }
        if report.convexity_margin <= 0.0 || report.convexity_margin.is_nan() {
            return Err(Error::NotConvex {
                margin: report.convexity_margin,
                node: report.margin_node,
            });
        }
        Ok(ConvexBody {
            h,
            convexity_margin: report.convexity_margin,
        })
    }

    pub fn from_values(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        Self::new(ScalarField::new(grid, values)?)
    }

    /// Ball of radius `c` centred at the origin.
    pub fn ball(grid: Arc<SphereGrid>, c: f64) -> Result<Self> {
        Self::new(ScalarField::constant(grid, c))
    }

    /// Ball of radius `c` centred at `v`: `h = c + v·x`.
    pub fn offset_ball(grid: Arc<SphereGrid>, c: f64, v: Point) -> Result<Self> {
        Self::new(ScalarField::from_direction_fn(grid, |x| {
            c + v[0] * x[0] + v[1] * x[1] + v[2] * x[2]
        })?)
    }

    /// Centred ellipse (`n = 2`) or ellipsoid (`n = 3`) with the given semi-axes:
    /// `h(x) = (Σ a_i² x_i²)^{1/2}`.
    pub fn ellipsoid(grid: Arc<SphereGrid>, axes: &[f64]) -> Result<Self> {
        if axes.len() != grid.dim() {
            return Err(Error::InvalidConfig(format!(
                "{} semi-axes given for a body in R^{}",
                axes.len(),
                grid.dim()
            )));
        }
        let axes: Vec<f64> = axes.to_vec();
        Self::new(ScalarField::from_direction_fn(grid, |x| {
            axes.iter()
                .zip(x)
                .map(|(a, xi)| a * a * xi * xi)
                .sum::<f64>()
                .sqrt()
        })?)
    }

    /// `h(θ) = (a² cos²θ + b² sin²θ)^{1/2}` on the circle.
    pub fn ellipse(grid: Arc<SphereGrid>, a: f64, b: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::RequiresPlane(grid.dim()));
        }
        Self::ellipsoid(grid, &[a, b])
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.h.grid()
    }

    pub fn dim(&self) -> usize {
        self.h.grid().dim()
    }

    pub fn support(&self) -> &ScalarField {
        &self.h
    }

    pub fn values(&self) -> &[f64] {
        self.h.values()
    }

    pub fn convexity_margin(&self) -> f64 {
        self.convexity_margin
    }

    pub(crate) fn local(&self, k: usize) -> LocalGeometry {
        LocalGeometry::at(self.grid(), self.values(), k)
    }
}

/// Boundary point with outer normal `x`: `X(x) = h(x)x + ∇h(x)`.
pub fn embedding(body: &ConvexBody) -> Vec<Point> {
    let grid = body.grid();
    par_map(grid.len(), |k| {
        let loc = body.local(k);
        let x = grid.node(k);
        let t = grid.lift_tangent(k, loc.grad);
        [
            loc.h * x[0] + t[0],
            loc.h * x[1] + t[1],
            loc.h * x[2] + t[2],
        ]
    })
}

/// `r = (|∇h|² + h²)^{1/2}` at every node.
pub fn radial_norm_field(body: &ConvexBody) -> ScalarField {
    let values = par_map(body.grid().len(), |k| body.local(k).r);
    ScalarField::from_parts_unchecked(body.grid().clone(), values)
}

/// Refined maximizer of `v ↦ (ξ·v)/h(v)` over the sphere.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SupportMaximizer {
    /// `max_v (ξ·v)/h(v) = 1/ρ(ξ)`.
    pub value: f64,
    /// Refined maximizing direction: the outer normal at `ρ(ξ)ξ`.
    pub normal: Point,
}

/// Evaluates radial quantities of one body at arbitrary directions.
pub(crate) struct RadialSampler<'a> {
    grid: &'a SphereGrid,
    inv_h: Vec<f64>,
}

impl<'a> RadialSampler<'a> {
    pub(crate) fn new(body: &'a ConvexBody) -> Self {
        RadialSampler {
            grid: body.grid(),
            inv_h: body.values().iter().map(|h| 1.0 / h).collect(),
        }
    }

    #[inline]
    fn objective(&self, xi: &Point, k: usize) -> f64 {
        let v = self.grid.node(k);
        (xi[0] * v[0] + xi[1] * v[1] + xi[2] * v[2]) * self.inv_h[k]
    }

    pub(crate) fn maximize(&self, xi: &Point) -> SupportMaximizer {
        let grid = self.grid;
        let mut node = 0;
        let mut best = f64::NEG_INFINITY;
        for k in 0..grid.len() {
            let q = self.objective(xi, k);
            // strict comparison keeps the lowest index on ties
            if q > best {
                best = q;
                node = k;
            }
        }
        if grid.dim() == 2 {
            return self.refine_circle(xi, node, best);
        }
        self.refine_sphere(xi, node, best)
    }

    /// Maximizes `(ξ·v(θ, φ))·p(θ, φ)` by Newton, where `p` is the quadratic
    /// through `1/h` on the 3×3 stencil around the discrete maximizer.
    fn refine_sphere(&self, xi: &Point, node: usize, best: f64) -> SupportMaximizer {
        let grid = self.grid;
        let (theta0, phi0) = grid.angles(node);
        let (dt, dp) = grid.spacing();
        let p = |dj: isize, di: isize| self.inv_h[grid.offset(node, dj, di)];
        let p0 = p(0, 0);
        let a = 0.5 * (p(1, 0) - p(-1, 0));
        let b = 0.5 * (p(0, 1) - p(0, -1));
        let aa = p(1, 0) - 2.0 * p0 + p(-1, 0);
        let cc = p(0, 1) - 2.0 * p0 + p(0, -1);
        let bb = 0.25 * (p(1, 1) - p(1, -1) - p(-1, 1) + p(-1, -1));
        let dot = |v: [f64; 3]| xi[0] * v[0] + xi[1] * v[1] + xi[2] * v[2];
        // value, gradient and Hessian of the objective in (θ, φ)
        let eval = |th: f64, ph: f64| {
            let (u, w) = ((th - theta0) / dt, (ph - phi0) / dp);
            let m = p0 + a * u + b * w + 0.5 * aa * u * u + bb * u * w + 0.5 * cc * w * w;
            let m_t = (a + aa * u + bb * w) / dt;
            let m_p = (b + bb * u + cc * w) / dp;
            let (m_tt, m_tp, m_pp) = (aa / (dt * dt), bb / (dt * dp), cc / (dp * dp));
            let (st, ct) = th.sin_cos();
            let (sp, cp) = ph.sin_cos();
            let c = dot([st * cp, st * sp, ct]);
            let c_t = dot([ct * cp, ct * sp, -st]);
            let c_p = dot([-st * sp, st * cp, 0.0]);
            let c_tt = -c;
            let c_tp = dot([-ct * sp, ct * cp, 0.0]);
            let c_pp = dot([-st * cp, -st * sp, 0.0]);
            (
                c * m,
                [c_t * m + c * m_t, c_p * m + c * m_p],
                [
                    c_tt * m + 2.0 * c_t * m_t + c * m_tt,
                    c_tp * m + c_t * m_p + c_p * m_t + c * m_tp,
                    c_pp * m + 2.0 * c_p * m_p + c * m_pp,
                ],
            )
        };
        let (mut th, mut ph) = (theta0, phi0);
        for _ in 0..8 {
            let (_, g, h) = eval(th, ph);
            let det = h[0] * h[2] - h[1] * h[1];
            if !(h[0] < 0.0 && det > 0.0) {
                break;
            }
            let d0 = -(h[2] * g[0] - h[1] * g[1]) / det;
            let d1 = -(-h[1] * g[0] + h[0] * g[1]) / det;
            let next = (
                (th + d0).clamp(theta0 - dt, theta0 + dt),
                (ph + d1).clamp(phi0 - dp, phi0 + dp),
            );
            let done = (next.0 - th).abs() < 1e-15 && (next.1 - ph).abs() < 1e-15;
            (th, ph) = next;
            if done {
                break;
            }
        }
        let value = eval(th, ph).0;
        let (value, th, ph) = if value >= best { (value, th, ph) } else { (best, theta0, phi0) };
        SupportMaximizer {
            value,
            normal: grid.direction(th, ph),
        }
    }

    /// Maximizes `cos(θ − t)·p(θ)` where `p` is the quartic through `1/h` at
    /// the five nodes centred on the discrete maximizer; `t` is the angle of ξ.
    fn refine_circle(&self, xi: &Point, node: usize, best: f64) -> SupportMaximizer {
        let grid = self.grid;
        let (theta, _) = grid.angles(node);
        let (dt, _) = grid.spacing();
        let t = xi[1].atan2(xi[0]);
        let v: Vec<f64> = (-2..=2).map(|i| self.inv_h[grid.offset(node, 0, i)]).collect();
        // p(s) = Σ c_i (s/Δ)^i from central differences at the five nodes
        let c = [
            v[2],
            (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / 12.0,
            (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / 24.0,
            (-v[0] + 2.0 * v[1] - 2.0 * v[3] + v[4]) / 12.0,
            (v[0] - 4.0 * v[1] + 6.0 * v[2] - 4.0 * v[3] + v[4]) / 24.0,
        ];
        let poly = |s: f64| {
            let u = s / dt;
            let p = c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * c[4])));
            let p1 = (c[1] + u * (2.0 * c[2] + u * (3.0 * c[3] + u * 4.0 * c[4]))) / dt;
            let p2 = (2.0 * c[2] + u * (6.0 * c[3] + u * 12.0 * c[4])) / (dt * dt);
            (p, p1, p2)
        };
        let objective = |s: f64| {
            let (p, p1, p2) = poly(s);
            let (sn, cs) = (theta + s - t).sin_cos();
            (cs * p, cs * p1 - sn * p, cs * p2 - 2.0 * sn * p1 - cs * p)
        };
        let mut s = 0.0;
        for _ in 0..8 {
            let (_, d1, d2) = objective(s);
            if !(d2 < 0.0) {
                break;
            }
            let next = (s - d1 / d2).clamp(-dt, dt);
            let done = (next - s).abs() < 1e-15;
            s = next;
            if done {
                break;
            }
        }
        let value = objective(s).0;
        let (value, s) = if value >= best { (value, s) } else { (best, 0.0) };
        SupportMaximizer {
            value,
            normal: grid.direction(theta + s, 0.0),
        }
    }

    pub(crate) fn radial(&self, xi: &Point) -> f64 {
        1.0 / self.maximize(xi).value
    }
}

/// Radial function `ρ(ξ) = [max_v (ξ·v)/h(v)]⁻¹`, refined by a local fit
/// around the maximizing node.
pub fn radial_eval(body: &ConvexBody, xi: &Point) -> f64 {
    RadialSampler::new(body).radial(xi)
}

/// Outer unit normal at the boundary point `ρ(ξ)ξ`.
pub fn reverse_radial_gauss(body: &ConvexBody, xi: &Point) -> Point {
    RadialSampler::new(body).maximize(xi).normal
}

/// Direction of the boundary point whose outer normal is node `k`: `X(x)/|X(x)|`.
pub fn radial_gauss_map(body: &ConvexBody, k: usize) -> Point {
    let grid = body.grid();
    let loc = body.local(k);
    let x = grid.node(k);
    let t = grid.lift_tangent(k, loc.grad);
    let p = [
        loc.h * x[0] + t[0],
        loc.h * x[1] + t[1],
        loc.h * x[2] + t[2],
    ];
    [p[0] / loc.r, p[1] / loc.r, p[2] / loc.r]
}

/// Polar body: support `h*(u) = 1/ρ(u)` sampled at the grid nodes.
pub fn polar_body(body: &ConvexBody) -> Result<ConvexBody> {
    let sampler = RadialSampler::new(body);
    let grid = body.grid();
    let values = par_map(grid.len(), |k| sampler.maximize(&grid.node(k)).value);
    ConvexBody::new(ScalarField::new(grid.clone(), values)?)
}

/// `|Jac α| = rⁿ𝒦/h` at every node.
pub fn jac_alpha(body: &ConvexBody) -> ScalarField {
    let dim = body.dim();
    let values = par_map(body.grid().len(), |k| {
        let loc = body.local(k);
        loc.r_pow_n(dim) / (loc.det_b * loc.h)
    });
    ScalarField::from_parts_unchecked(body.grid().clone(), values)
}

/// `|Jac α*| = h/(rⁿ𝒦)` at every node.
pub fn jac_alpha_star(body: &ConvexBody) -> ScalarField {
    let dim = body.dim();
    let values = par_map(body.grid().len(), |k| {
        let loc = body.local(k);
        loc.h * loc.det_b / loc.r_pow_n(dim)
    });
    ScalarField::from_parts_unchecked(body.grid().clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn offset_circle(n: usize) -> ConvexBody {
        ConvexBody::offset_ball(build_grid(2, n).unwrap(), 1.0, [0.3, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn ball_embeds_as_scaled_sphere() {
        let g = build_grid(2, 64).unwrap();
        for c in [1.0, 2.0] {
            let body = ConvexBody::ball(g.clone(), c).unwrap();
            for (k, p) in embedding(&body).iter().enumerate() {
                let x = g.node(k);
                assert_eq!(*p, [c * x[0], c * x[1], 0.0]);
            }
        }
    }

    #[test]
    fn offset_circle_embedding_is_shifted_circle() {
        let body = offset_circle(256);
        let g = body.grid().clone();
        for (k, p) in embedding(&body).iter().enumerate() {
            let (t, _) = g.angles(k);
            assert_abs_diff_eq!(p[0], 0.3 + t.cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(p[1], t.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn radial_norm_matches_embedding() {
        let body = ConvexBody::ellipse(build_grid(2, 128).unwrap(), 1.5, 0.7).unwrap();
        let r = radial_norm_field(&body);
        for (k, p) in embedding(&body).iter().enumerate() {
            let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert_abs_diff_eq!(r.values()[k], norm, epsilon = 1e-12);
        }
        let body = offset_circle(256);
        let r = radial_norm_field(&body);
        assert_abs_diff_eq!(r.values()[0], 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(r.values()[64], 1.09f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn radial_eval_examples() {
        let g = build_grid(2, 256).unwrap();
        for c in [1.0, 2.0] {
            let body = ConvexBody::ball(g.clone(), c).unwrap();
            for t in [0.1f64, 1.0, 4.0] {
                assert_abs_diff_eq!(radial_eval(&body, &[t.cos(), t.sin(), 0.0]), c, epsilon = 1e-12);
            }
        }
        let body = offset_circle(256);
        assert_abs_diff_eq!(radial_eval(&body, &[1.0, 0.0, 0.0]), 1.3, epsilon = 1e-9);
    }

    #[test]
    fn reverse_map_of_offset_circle() {
        let body = offset_circle(256);
        let x = reverse_radial_gauss(&body, &[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(x[0], -0.3, epsilon = 1e-4);
        assert_abs_diff_eq!(x[1], 0.91f64.sqrt(), epsilon = 1e-4);
        let x = reverse_radial_gauss(&body, &[1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn forward_map_examples() {
        let g = build_grid(2, 256).unwrap();
        let ball = ConvexBody::ball(g.clone(), 1.0).unwrap();
        assert_eq!(radial_gauss_map(&ball, 17), g.node(17));
        let body = offset_circle(256);
        let xi = radial_gauss_map(&body, 0);
        assert_abs_diff_eq!(xi[0], 1.0, epsilon = 1e-15);
        let xi = radial_gauss_map(&body, 64);
        let norm = 1.09f64.sqrt();
        assert_abs_diff_eq!(xi[0], 0.3 / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(xi[1], 1.0 / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(g.angles(64).0, FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn polar_of_balls() {
        let g = build_grid(2, 64).unwrap();
        let polar = polar_body(&ConvexBody::ball(g.clone(), 2.0).unwrap()).unwrap();
        for v in polar.values() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-14);
        }
        let polar = polar_body(&ConvexBody::ball(g, 1.0).unwrap()).unwrap();
        for v in polar.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn validate_examples() {
        let g = build_grid(2, 256).unwrap();
        let unit = validate(&ScalarField::constant(g.clone(), 1.0));
        assert_eq!(unit.convexity_margin, 1.0);
        assert!(unit.accepted());

        let point = validate(&ScalarField::from_angle_fn(g.clone(), |t, _| t.cos()).unwrap());
        assert!(point.convexity_margin.abs() < 1e-10, "{}", point.convexity_margin);
        assert!(!point.accepted());
        assert!(ConvexBody::from_values(g.clone(), vec![-1.0; 256]).is_err());

        let shifted = validate(&ScalarField::from_angle_fn(g, |t, _| 1.0 + 0.3 * t.cos()).unwrap());
        assert_abs_diff_eq!(shifted.convexity_margin, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn jacobians_of_balls_are_one() {
        for (n, res) in [(2, 64), (3, 16)] {
            let g = build_grid(n, res).unwrap();
            for c in [1.0, 2.5] {
                let body = ConvexBody::ball(g.clone(), c).unwrap();
                for v in jac_alpha_star(&body).values() {
                    assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
                }
                for v in jac_alpha(&body).values() {
                    assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
                }
            }
        }
    }
}
