use std::f64::consts::{FRAC_PI_2, TAU};

use approx::assert_abs_diff_eq;
use orlicz_flow::{
    build_grid, embedding, jac_alpha, jac_alpha_star, polar_body, radial_eval, radial_gauss_map, radial_norm_field,
    reverse_radial_gauss, validate, ConvexBody, ScalarField,
};
use proptest::prelude::*;

fn offset_circle(res: usize) -> ConvexBody {
    let g = build_grid(2, res).unwrap();
    ConvexBody::new(ScalarField::from_angle_fn(g, |t, _| 1.0 + 0.3 * t.cos()).unwrap()).unwrap()
}

fn dir(t: f64) -> [f64; 3] {
    [t.cos(), t.sin(), 0.0]
}

#[test]
fn embedding_of_offset_circle_is_translated_unit_circle() {
    let body = offset_circle(256);
    let grid = body.grid().clone();
    for (k, p) in embedding(&body).iter().enumerate() {
        let t = grid.angles(k).0;
        assert_abs_diff_eq!(p[0], 0.3 + t.cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], t.sin(), epsilon = 1e-10);
    }
    let two = ConvexBody::ball(build_grid(3, 16).unwrap(), 2.0).unwrap();
    for (k, p) in embedding(&two).iter().enumerate() {
        let x = two.grid().node(k);
        for i in 0..3 {
            assert_abs_diff_eq!(p[i], 2.0 * x[i], epsilon = 1e-12);
        }
    }
}

#[test]
fn radial_norm_examples() {
    let body = offset_circle(256);
    let r = radial_norm_field(&body);
    // node 0 at θ = 0, node 64 at θ = π/2
    assert_abs_diff_eq!(r.values()[0], 1.3, epsilon = 1e-10);
    assert_abs_diff_eq!(r.values()[64], 1.09f64.sqrt(), epsilon = 1e-10);
    let ball = ConvexBody::ball(build_grid(2, 64).unwrap(), 0.7).unwrap();
    assert!(radial_norm_field(&ball).values().iter().all(|v| (v - 0.7).abs() < 1e-14));
}

#[test]
fn radial_function_examples() {
    let body = offset_circle(256);
    assert_abs_diff_eq!(radial_eval(&body, &dir(0.0)), 1.3, epsilon = 1e-10);
    // ray ξ = (0, 1) meets the circle centred at (0.3, 0) at (0, √0.91)
    assert_abs_diff_eq!(radial_eval(&body, &dir(FRAC_PI_2)), 0.91f64.sqrt(), epsilon = 1e-8);
    for c in [1.0, 2.0] {
        let ball = ConvexBody::ball(build_grid(3, 16).unwrap(), c).unwrap();
        let xi = [0.36, -0.48, 0.8];
        assert_abs_diff_eq!(radial_eval(&ball, &xi), c, epsilon = 1e-12);
    }
}

#[test]
fn reverse_radial_gauss_examples() {
    let body = offset_circle(256);
    let x = reverse_radial_gauss(&body, &dir(FRAC_PI_2));
    assert_abs_diff_eq!(x[0], -0.3, epsilon = 1e-8);
    assert_abs_diff_eq!(x[1], 0.91f64.sqrt(), epsilon = 1e-8);
    let x = reverse_radial_gauss(&body, &dir(0.0));
    assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-12);

    let xi = radial_gauss_map(&body, 0);
    assert_abs_diff_eq!(xi[0], 1.0, epsilon = 1e-12);
    let xi = radial_gauss_map(&body, 64);
    let norm = 1.09f64.sqrt();
    assert_abs_diff_eq!(xi[0], 0.3 / norm, epsilon = 1e-10);
    assert_abs_diff_eq!(xi[1], 1.0 / norm, epsilon = 1e-10);
}

fn round_trip_error(res: usize) -> f64 {
    let body = ConvexBody::ellipse(build_grid(2, res).unwrap(), 1.5, 0.7).unwrap();
    (0..res)
        .map(|k| {
            let x = reverse_radial_gauss(&body, &radial_gauss_map(&body, k));
            let node = body.grid().node(k);
            (x[0] - node[0]).abs().max((x[1] - node[1]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn maps_are_mutually_inverse_on_an_ellipse() {
    let (coarse, fine) = (round_trip_error(256), round_trip_error(512));
    assert!(coarse < 1e-3, "round trip error {coarse}");
    assert!(coarse / fine >= 3.5, "round trip refinement ratio {}", coarse / fine);
}

#[test]
fn polar_examples() {
    let g = build_grid(2, 128).unwrap();
    let polar = polar_body(&ConvexBody::ball(g.clone(), 2.0).unwrap()).unwrap();
    assert!(polar.values().iter().all(|v| (v - 0.5).abs() < 1e-12));
    let unit = polar_body(&ConvexBody::ball(g, 1.0).unwrap()).unwrap();
    assert!(unit.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn polar_of_ellipse_matches_the_dual_ellipse() {
    let (a, b) = (1.5, 0.7);
    let g = build_grid(2, 256).unwrap();
    let body = ConvexBody::ellipse(g.clone(), a, b).unwrap();
    let polar = polar_body(&body).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..g.len() {
        let u = g.node(k);
        let exact = (u[0] * u[0] / (a * a) + u[1] * u[1] / (b * b)).sqrt();
        worst = worst.max((polar.values()[k] - exact).abs());
    }
    assert!(worst < 1e-4, "polar error {worst}");
    let back = polar_body(&polar).unwrap();
    let bipolar = back.values().iter().zip(body.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(bipolar < 1e-3, "bipolar error {bipolar}");
}

#[test]
fn jacobian_examples() {
    for c in [1.0, 2.5] {
        let ball = ConvexBody::ball(build_grid(2, 64).unwrap(), c).unwrap();
        assert!(jac_alpha(&ball).values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(jac_alpha_star(&ball).values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}

#[test]
fn convexity_margin_examples() {
    let g = build_grid(2, 256).unwrap();
    assert_abs_diff_eq!(ConvexBody::ball(g.clone(), 1.0).unwrap().convexity_margin(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(offset_circle(256).convexity_margin(), 1.0, epsilon = 1e-10);
    let point = ScalarField::from_angle_fn(g.clone(), |t, _| t.cos()).unwrap();
    let report = validate(&point);
    assert!(report.convexity_margin.abs() < 1e-10);
    assert!(!report.accepted());
    assert!(ConvexBody::new(point).is_err());
    let dented = ScalarField::from_angle_fn(g, |t, _| 1.0 + 0.2 * (3.0 * t).cos()).unwrap();
    assert!(validate(&dented).convexity_margin < 0.0);
    assert!(ConvexBody::new(dented).is_err());
}

#[test]
fn ellipsoid_on_the_sphere_is_admissible() {
    let body = ConvexBody::ellipsoid(build_grid(3, 32).unwrap(), &[1.2, 1.0, 0.8]).unwrap();
    assert!(body.convexity_margin() > 0.0);
    // the radial function along the axes is the semi-axis
    assert_abs_diff_eq!(radial_eval(&body, &[1.0, 0.0, 0.0]), 1.2, epsilon = 1e-3);
    assert_abs_diff_eq!(radial_eval(&body, &[0.0, 0.0, 1.0]), 0.8, epsilon = 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn margin_is_translation_covariant(vx in -0.3f64..0.3, vy in -0.3f64..0.3, a in 1.0f64..1.6, b in 0.6f64..1.0) {
        let g = build_grid(2, 128).unwrap();
        let body = ConvexBody::ellipse(g.clone(), a, b).unwrap();
        let moved = ScalarField::from_angle_fn(g, |t, _| {
            (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt() + vx * t.cos() + vy * t.sin()
        }).unwrap();
        prop_assert!((validate(&moved).convexity_margin - body.convexity_margin()).abs() < 1e-10);
    }

    #[test]
    fn jacobians_are_reciprocal(c in 0.5f64..2.0, vx in -0.2f64..0.2, vy in -0.2f64..0.2) {
        let g = build_grid(2, 128).unwrap();
        let body = ConvexBody::offset_ball(g, c, [vx * c, vy * c, 0.0]).unwrap();
        for (p, q) in jac_alpha(&body).values().iter().zip(jac_alpha_star(&body).values()) {
            prop_assert!((p * q - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_function_scales_linearly(lambda in 0.3f64..3.0, t in 0.0f64..TAU) {
        let g = build_grid(2, 256).unwrap();
        let body = ConvexBody::ellipse(g.clone(), 1.5, 0.7).unwrap();
        let scaled = ConvexBody::new(body.support().map(|v| lambda * v)).unwrap();
        let (r, rs) = (radial_eval(&body, &dir(t)), radial_eval(&scaled, &dir(t)));
        prop_assert!((rs - lambda * r).abs() < 1e-10 * lambda.max(1.0));
    }

    #[test]
    fn gauss_map_round_trip_on_offset_balls(vx in -0.3f64..0.3, vy in -0.3f64..0.3, k in 0usize..128) {
        let g = build_grid(2, 128).unwrap();
        let body = ConvexBody::offset_ball(g.clone(), 1.0, [vx, vy, 0.0]).unwrap();
        let x = reverse_radial_gauss(&body, &radial_gauss_map(&body, k));
        let node = g.node(k);
        prop_assert!((x[0] - node[0]).abs() < 1e-6 && (x[1] - node[1]).abs() < 1e-6, "{:?}", x);
    }
}
