use std::f64::consts::{FRAC_PI_2, PI, TAU};

use approx::assert_abs_diff_eq;
use orlicz_flow::{
    build_grid, gauss_curvature, integral_curvature_density, orlicz_density, polar_body, principal_radii,
    radial_gauss_image_measure, total_integral_curvature, ConvexBody, PhiModel, ScalarField,
};
use proptest::prelude::*;

const VERTICES: usize = 100_000;

/// Brute-force length of the normal arc over the boundary points whose
/// direction lies in `[start, end]`, on a polygon through `VERTICES`
/// boundary points. Edge normals of the polygon are rotated edges.
fn polygon_normal_arc(boundary: impl Fn(f64) -> [f64; 2], start: f64, end: f64) -> f64 {
    let pts: Vec<[f64; 2]> = (0..VERTICES).map(|i| boundary(TAU * i as f64 / VERTICES as f64)).collect();
    let inside = |p: &[f64; 2]| (p[1].atan2(p[0]) - start).rem_euclid(TAU) <= end - start;
    let mut total = 0.0;
    for i in 0..VERTICES {
        let (p, q, r) = (pts[(i + VERTICES - 1) % VERTICES], pts[i], pts[(i + 1) % VERTICES]);
        if !inside(&q) {
            continue;
        }
        // turning angle at vertex q = angle between consecutive edge normals
        let (e1, e2) = ([q[0] - p[0], q[1] - p[1]], [r[0] - q[0], r[1] - q[1]]);
        total += (e1[0] * e2[1] - e1[1] * e2[0]).atan2(e1[0] * e2[0] + e1[1] * e2[1]);
    }
    total
}

fn offset_circle(res: usize) -> ConvexBody {
    ConvexBody::offset_ball(build_grid(2, res).unwrap(), 1.0, [0.3, 0.0, 0.0]).unwrap()
}

#[test]
fn principal_radii_examples() {
    let ball = ConvexBody::ball(build_grid(3, 16).unwrap(), 1.7).unwrap();
    let radii = principal_radii(&ball);
    assert!((0..radii.len()).all(|k| radii.at(k).iter().all(|r| (r - 1.7).abs() < 1e-12)));

    let ellipse = ConvexBody::ellipse(build_grid(2, 256).unwrap(), 1.5, 0.7).unwrap();
    // h_θθ + h = a²b²/h³ at θ = 0
    let exact = 1.1025 / 3.375;
    assert_abs_diff_eq!(exact, 0.326667, epsilon = 1e-6);
    assert_abs_diff_eq!(principal_radii(&ellipse).at(0)[0], exact, epsilon = 1e-3);

    let moved = offset_circle(256);
    let radii = principal_radii(&moved);
    assert!((0..radii.len()).all(|k| (radii.at(k)[0] - 1.0).abs() < 1e-10));
}

#[test]
fn gauss_curvature_examples() {
    let g2 = build_grid(2, 64).unwrap();
    let k = gauss_curvature(&ConvexBody::ball(g2.clone(), 2.0).unwrap()).unwrap();
    assert!(k.values().iter().all(|v| (v - 0.5).abs() < 1e-12));
    let g3 = build_grid(3, 16).unwrap();
    let k = gauss_curvature(&ConvexBody::ball(g3, 2.0).unwrap()).unwrap();
    assert!(k.values().iter().all(|v| (v - 0.25).abs() < 1e-12));

    let ellipse = ConvexBody::ellipse(build_grid(2, 256).unwrap(), 1.5, 0.7).unwrap();
    let exact = 3.375 / 1.1025;
    assert_abs_diff_eq!(exact, 3.06122, epsilon = 1e-5);
    let got = gauss_curvature(&ellipse).unwrap().values()[0];
    assert!((got - exact).abs() / exact < 1e-3, "K(0) = {got}");
}

#[test]
fn gauss_curvature_times_det_b_is_one() {
    let body = ConvexBody::ellipsoid(build_grid(3, 32).unwrap(), &[1.3, 1.0, 0.8]).unwrap();
    let k = gauss_curvature(&body).unwrap();
    let radii = principal_radii(&body);
    for i in 0..radii.len() {
        let det: f64 = radii.at(i).iter().product();
        assert!((k.values()[i] * det - 1.0).abs() < 1e-12);
    }
}

#[test]
fn integral_curvature_density_examples() {
    for c in [1.0, 0.4, 3.0] {
        let ball = ConvexBody::ball(build_grid(3, 16).unwrap(), c).unwrap();
        assert!(integral_curvature_density(&ball).values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
    let ellipse = ConvexBody::ellipse(build_grid(2, 256).unwrap(), 1.5, 0.7).unwrap();
    // h·(1/𝒦)/r² at θ = 0 with r = h = 1.5
    let exact = 1.5 * (1.1025 / 3.375) / 2.25;
    assert_abs_diff_eq!(exact, 0.21778, epsilon = 1e-5);
    let got = integral_curvature_density(&ellipse).values()[0];
    assert!((got - exact).abs() / exact < 1e-3, "density(0) = {got}");
}

#[test]
fn orlicz_density_examples() {
    let g = build_grid(2, 64).unwrap();
    let unit = ConvexBody::ball(g.clone(), 1.0).unwrap();
    let phi = PhiModel::power(-0.5);
    assert!(orlicz_density(&unit, &phi).unwrap().values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    let two = ConvexBody::ball(g, 2.0).unwrap();
    let d = orlicz_density(&two, &PhiModel::reciprocal()).unwrap();
    assert!(d.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
}

#[test]
fn total_curvature_is_full_measure_for_balls() {
    for c in [0.5, 1.0, 2.0] {
        let body = ConvexBody::ball(build_grid(2, 64).unwrap(), c).unwrap();
        assert_abs_diff_eq!(total_integral_curvature(&body), TAU, epsilon = 1e-12);
        let body = ConvexBody::ball(build_grid(3, 16).unwrap(), c).unwrap();
        assert_abs_diff_eq!(total_integral_curvature(&body), 4.0 * PI, epsilon = 1e-12);
    }
    assert!((total_integral_curvature(&offset_circle(256)) - TAU).abs() < 1e-3);
}

#[test]
fn image_measure_examples() {
    let ball = ConvexBody::ball(build_grid(2, 128).unwrap(), 1.3).unwrap();
    for (a, b) in [(0.0, 1.0), (0.4, 2.9), (-1.0, 0.3)] {
        assert_abs_diff_eq!(radial_gauss_image_measure(&ball, a, b).unwrap(), b - a, epsilon = 1e-12);
    }
    let moved = offset_circle(256);
    assert_abs_diff_eq!(radial_gauss_image_measure(&moved, 0.0, TAU).unwrap(), TAU, epsilon = 1e-12);
    assert!(radial_gauss_image_measure(&ConvexBody::ball(build_grid(3, 16).unwrap(), 1.0).unwrap(), 0.0, 1.0).is_err());
}

#[test]
fn image_measure_against_polygon_oracle() {
    // upper half-plane of directions on the circle centred at (0.3, 0)
    let circle = |t: f64| [0.3 + t.cos(), t.sin()];
    let oracle = polygon_normal_arc(circle, 0.0, PI);
    assert_abs_diff_eq!(oracle, PI, epsilon = 1e-4);
    let got = radial_gauss_image_measure(&offset_circle(256), 0.0, PI).unwrap();
    assert_abs_diff_eq!(got, oracle, epsilon = 1e-4);

    let ellipse = |t: f64| [1.5 * t.cos(), 0.7 * t.sin()];
    let body = ConvexBody::ellipse(build_grid(2, 256).unwrap(), 1.5, 0.7).unwrap();
    for (a, b) in [(0.3, 1.9), (FRAC_PI_2, 4.0), (-0.8, 0.2)] {
        let oracle = polygon_normal_arc(ellipse, a, b);
        let got = radial_gauss_image_measure(&body, a, b).unwrap();
        assert!((got - oracle).abs() < 1e-3, "arc [{a}, {b}]: {got} vs {oracle}");
    }
}

/// Node-aligned arc on the grid: the normal-arc length of `body` against the
/// trapezoid integral of the polar body's integral-curvature density.
fn patch_mismatch(body: &ConvexBody, i: usize, len: usize) -> f64 {
    let grid = body.grid();
    let n = grid.len();
    let density = integral_curvature_density(&polar_body(body).unwrap());
    let step = TAU / n as f64;
    let d = |k: usize| density.values()[k % n];
    let quad = step * ((i + 1..i + len).map(d).sum::<f64>() + 0.5 * (d(i) + d(i + len)));
    let a = grid.angles(i).0;
    (radial_gauss_image_measure(body, a, a + len as f64 * step).unwrap() - quad).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn patches_are_consistent(i in 0usize..256, len in 4usize..200) {
        let g = build_grid(2, 256).unwrap();
        let bodies = [
            ConvexBody::ellipse(g.clone(), 1.5, 0.7).unwrap(),
            ConvexBody::offset_ball(g.clone(), 1.0, [0.3, 0.0, 0.0]).unwrap(),
            ConvexBody::new(ScalarField::from_angle_fn(g, |t, _| 1.2 + 0.05 * (2.0 * t).cos()).unwrap()).unwrap(),
        ];
        for body in &bodies {
            let e = patch_mismatch(body, i, len);
            prop_assert!(e < 5e-3, "arc ({}, {}): {}", i, len, e);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scale_law(lambda in 0.2f64..5.0, a in 1.0f64..1.8, b in 0.5f64..1.0) {
        for (n, res) in [(2usize, 128usize), (3, 16)] {
            let g = build_grid(n, res).unwrap();
            let body = if n == 2 {
                ConvexBody::ellipse(g, a, b).unwrap()
            } else {
                ConvexBody::ellipsoid(g, &[a, 1.0, b]).unwrap()
            };
            let scaled = ConvexBody::new(body.support().map(|v| lambda * v)).unwrap();
            let (k, ks) = (gauss_curvature(&body).unwrap(), gauss_curvature(&scaled).unwrap());
            let factor = lambda.powi(1 - n as i32);
            for (x, y) in k.values().iter().zip(ks.values()) {
                prop_assert!((y - factor * x).abs() <= 1e-10 * (factor * x).abs());
            }
            let (d, ds) = (integral_curvature_density(&body), integral_curvature_density(&scaled));
            for (x, y) in d.values().iter().zip(ds.values()) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs());
            }
        }
    }

    #[test]
    fn total_curvature_is_translation_invariant(vx in -0.25f64..0.25, vy in -0.25f64..0.25) {
        let g = build_grid(2, 256).unwrap();
        let body = ConvexBody::ellipse(g.clone(), 1.5, 0.7).unwrap();
        let moved = ConvexBody::new(ScalarField::from_angle_fn(g, |t, _| {
            (2.25 * t.cos().powi(2) + 0.49 * t.sin().powi(2)).sqrt() + vx * t.cos() + vy * t.sin()
        }).unwrap()).unwrap();
        prop_assert!((total_integral_curvature(&moved) - total_integral_curvature(&body)).abs() < 1e-3);
    }
}
