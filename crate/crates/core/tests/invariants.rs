use proptest::prelude::*;

use linfinity::charts::{blowdown, blowup, from_compactified, glue, to_compactified};
use linfinity::fields::{blownup_rhs, infinity_plane_polar, original_jacobian, Params};
use linfinity::infinity::{flux_through_cylinder, radial_rate, R_STAR};
use linfinity::numerics::eig::{eig3, eigen_residual};
use linfinity::ChartPoint;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

// det(lambda I - J(0)) expanded by hand.
fn char_poly(l: f64, p: &Params) -> f64 {
    l * l * l + l * l + (4.0 * p.gamma - p.alpha * p.beta) * l + 4.0 * p.gamma
}

proptest! {
    #[test]
    fn compactification_inverts(x in -50.0..50.0f64, y in 1e-3..1e4f64, z in -50.0..50.0f64) {
        let c = to_compactified(&ChartPoint::original([x, y, z])).unwrap();
        let back = from_compactified(&c).unwrap().coords;
        for (a, b) in back.iter().zip([x, y, z]) {
            prop_assert!(close(*a, b, 1e-11));
        }
    }

    #[test]
    fn blowup_then_glue(xb in -5.0..5.0f64, zb in -10.0..10.0f64, w in 1e-3..2.0f64) {
        let ub = ChartPoint::blown_up([xb, zb, w]);
        let c = blowdown(&ub).unwrap();
        for (a, b) in blowup(&c).unwrap().coords.iter().zip([xb, zb, w]) {
            prop_assert!(close(*a, b, 1e-13));
        }
        let g = glue(&[xb, zb, w]).0;
        let o = from_compactified(&c).unwrap().coords;
        for (a, b) in g.iter().zip(o) {
            prop_assert!(close(*a, b, 1e-11));
        }
    }

    #[test]
    fn origin_eigenvalues_solve_characteristic_polynomial(alpha in 3.0..8.0f64, beta in 0.5..4.0f64, gamma in 0.1..1.0f64) {
        let p = Params::with_gamma(alpha, beta, gamma);
        let j = original_jacobian(&[0.0; 3], &p);
        if let Ok(e) = eig3(&j) {
            for l in e.values {
                let scale = l.abs().powi(3) + l * l + alpha * beta * l.abs() + 4.0;
                prop_assert!(char_poly(l, &p).abs() <= 1e-10 * scale);
            }
            prop_assert!(eigen_residual(&j, &e) < 1e-9);
            prop_assert!((e.values.iter().sum::<f64>() + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn plane_at_infinity_is_invariant(xb in -3.0..3.0f64, zb in -10.0..4.0f64, alpha in 4.0..7.0f64, beta in 0.0..4.0f64) {
        let f = blownup_rhs(&[xb, zb, 0.0], &Params::new(alpha, beta));
        prop_assert_eq!(f[2], 0.0);
        prop_assert!((8.0 * xb * f[0] + 2.0 * (zb + alpha) * f[1]).abs() < 1e-10);
    }

    #[test]
    fn infinity_plane_rotates_clockwise_near_origin(r in 0.0..0.5f64, theta in 0.0..6.3f64) {
        let (_, theta_dot) = infinity_plane_polar(r, theta);
        prop_assert!(theta_dot < 0.0);
    }
}

// Averaging the radial rate over one turn of the ellipse with the periodic
// trapezoid rule, which is exact up to rounding for trigonometric polynomials.
fn averaged_rate(r: f64, w: f64, p: &Params) -> f64 {
    let n = 64;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|k| radial_rate(r, k as f64 * h, w, p)).sum::<f64>() * h
}

#[test]
fn flux_agrees_with_trapezoid_average() {
    let p = Params::new(5.3, 2.0);
    for r in [0.25, 0.8, 1.0, R_STAR, 1.6] {
        let w = 0.05;
        let avg = averaged_rate(r, w, &p) / (w * w);
        assert!((avg - flux_through_cylinder(r, &p)).abs() < 1e-9, "r = {r}: {avg} vs {}", flux_through_cylinder(r, &p));
    }
    assert!(((4.0f64 / 3.0).sqrt() - R_STAR).abs() < 1e-15);
}
