//! Invariants of the pointwise operators and kernels.

use fraclab::field::{CubicBump, SmoothBump};
use fraclab::kernels::green_ball;
use fraclab::operators::{frac_laplacian, log_laplacian, log_laplacian_compact, restriction_ws};
use fraclab::quadrature::integrate_interior;
use fraclab::{CompactField, Domain, FnField, Point, QuadConfig, ScalarField, Support};
use proptest::prelude::*;

fn cfg() -> QuadConfig {
    QuadConfig::default().with_tolerances(1e-8, 1e-11)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn operators_commute_with_translation(
        tx in -3.0f64..3.0, ty in -3.0f64..3.0,
        px in -0.5f64..0.5, py in -0.5f64..0.5,
        s in 0.15f64..0.95,
    ) {
        let x = Point::new(&[px, py]);
        let shifted = Point::new(&[px + tx, py + ty]);
        let u = CubicBump::new(&[0.1, -0.2], 0.9, 1.0);
        let ut = CubicBump::new(&[0.1 + tx, -0.2 + ty], 0.9, 1.0);
        let a = frac_laplacian(&u, &x, s, &cfg()).unwrap().value;
        let b = frac_laplacian(&ut, &shifted, s, &cfg()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{} vs {}", a, b);

        let v = SmoothBump::new(&[0.0, 0.1], 0.8);
        let vt = SmoothBump::new(&[tx, 0.1 + ty], 0.8);
        let a = log_laplacian(&v, &x, &cfg()).unwrap().value;
        let b = log_laplacian(&vt, &shifted, &cfg()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    /// Symbol 2 ln|ξ|: L_Δ[u(λ·)](x) = L_Δu(λx) + 2 ln λ · u(λx).
    #[test]
    fn log_laplacian_scaling(px in -0.6f64..0.6, py in -0.6f64..0.6, big in proptest::bool::ANY) {
        let lambda: f64 = if big { 2.0 } else { 0.5 };
        let (c, r) = ([0.2, -0.1], 0.9);
        let u = SmoothBump::new(&c, r);
        let scaled = SmoothBump::new(&[c[0] / lambda, c[1] / lambda], r / lambda);
        let x = Point::new(&[px, py]);
        let lx = x * lambda;
        let lhs = log_laplacian(&scaled, &x, &cfg()).unwrap().value;
        let rhs = log_laplacian(&u, &lx, &cfg()).unwrap().value + 2.0 * lambda.ln() * u.eval(&lx);
        prop_assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1e-3), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn exterior_restriction_is_nonpositive_for_nonnegative_data(
        r in 1.01f64..4.0, angle in 0.0f64..6.28, s in 0.1f64..0.95, amp in 0.0f64..3.0,
    ) {
        let d = Domain::unit_ball(2);
        let f = CompactField::radial(d, 1.0, move |q| amp * (1.0 - q * q) + 0.1 * amp);
        let x = Point::new(&[r * angle.cos(), r * angle.sin()]);
        let w = restriction_ws(&f, s, &x, &QuadConfig::default()).unwrap().value;
        prop_assert!(w <= 0.0, "w = {}", w);
    }

    #[test]
    fn ball_green_function_is_symmetric_and_positive(
        x0 in -0.69f64..0.69, x1 in -0.69f64..0.69, y0 in -0.69f64..0.69, y1 in -0.69f64..0.69,
        s in 0.05f64..1.0,
    ) {
        let x = Point::new(&[x0, x1]);
        let y = Point::new(&[y0, y1]);
        prop_assume!(x.dist(&y) > 1e-6);
        let a = green_ball(s, &x, &y, 1.0).unwrap();
        let b = green_ball(s, &y, &x, 1.0).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a, "{} vs {}", a, b);
    }
}

#[test]
fn representations_of_log_laplacian_agree() {
    let d = Domain::unit_ball(2);
    let fields = [
        CompactField::constant(d.clone(), 1.0),
        CompactField::new(d.clone(), 1.0, |y| (-1.0 / (1.0 - 0.8 * y.norm_sq())).exp()),
    ];
    for f in &fields {
        for x in [[0.0, 0.0], [0.3, -0.2], [0.6, 0.1], [0.05, 0.9]] {
            let x = Point::new(&x);
            let a = log_laplacian(f, &x, &cfg()).unwrap();
            let b = log_laplacian_compact(f, &x, &cfg()).unwrap();
            let bound = 3.0 * (a.error_estimate + b.error_estimate) + 1e-9;
            assert!((a.value - b.value).abs() <= bound, "{:?}: {} vs {}", x, a.value, b.value);
        }
    }
}

#[test]
fn integration_is_linear() {
    let d = Domain::unit_ball(2);
    let f = SmoothBump::new(&[0.1, 0.0], 0.7);
    let g = CubicBump::new(&[-0.2, 0.3], 0.6, 2.0);
    let (fc, gc) = (f.clone(), g.clone());
    let h = FnField::new(2, move |y| 3.0 * fc.eval(y) - 0.5 * gc.eval(y));
    let c = cfg();
    let lhs = integrate_interior(&d, &h, &c).unwrap().value;
    let rhs = 3.0 * integrate_interior(&d, &f, &c).unwrap().value - 0.5 * integrate_interior(&d, &g, &c).unwrap().value;
    assert!((lhs - rhs).abs() < 1e-8 * lhs.abs());
}

/// w_s ≤ 0 outside Ω, so L_Δ w_s = -c_N ∫ w_s(y)/|x-y|^N dy > 0 inside.
#[test]
fn log_laplacian_of_exterior_restriction_is_positive_inside() {
    let d = Domain::unit_ball(2);
    let one = CompactField::constant(d.clone(), 1.0);
    let inner = QuadConfig::default();
    let w = FnField::new(2, move |y| if y.norm() <= 1.0 { 0.0 } else { restriction_ws(&one, 0.5, y, &inner).unwrap().value })
        .with_support(Support::Exterior(d));
    let v = log_laplacian(&w, &Point::new(&[0.2, 0.1]), &QuadConfig::default().with_tolerances(1e-4, 1e-7)).unwrap();
    assert!(v.value > 0.0 && v.value > 10.0 * v.error_estimate, "{v:?}");
}
