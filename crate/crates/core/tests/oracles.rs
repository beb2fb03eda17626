//! Closed-form oracles checked through independent numerical paths.

use fraclab::derivative::{radial_grid, solve_vs};
use fraclab::operators::frac_laplacian;
use fraclab::{CompactField, Domain, Ellipsoid, Point, QuadConfig, TorsionFamily};

/// The anisotropic torsion constant is accepted only because the
/// fractional Laplacian of c_{s,A}(1 - Ax·x)^s_+ comes out as 1.
#[test]
fn ellipsoid_torsion_solves_unit_problem() {
    let c = QuadConfig::default().with_tolerances(1e-7, 1e-10);
    let cases = [
        (Ellipsoid::diagonal(&[1.0, 4.0]).unwrap(), vec![[0.0, 0.0], [0.3, 0.1], [0.0, 0.4]]),
        (Ellipsoid::from_upper_triangle(&[2.0, 0.6, 1.0]).unwrap(), vec![[0.1, -0.2], [0.4, 0.0]]),
    ];
    for (e, pts) in cases {
        let fam = TorsionFamily::new(Domain::ellipsoid(e));
        for s in [0.3, 0.5, 0.8] {
            let u = fam.field(s).unwrap();
            for x in &pts {
                let v = frac_laplacian(&u, &Point::new(x), s, &c).unwrap().value;
                assert!((v - 1.0).abs() < 1e-7, "s = {s}, x = {x:?}: {v}");
            }
        }
    }
}

#[test]
fn ellipsoid_torsion_in_three_dimensions() {
    let fam = TorsionFamily::new(Domain::ellipsoid(Ellipsoid::diagonal(&[1.0, 2.0, 5.0]).unwrap()));
    let c = QuadConfig::default().with_tolerances(1e-6, 1e-9);
    let u = fam.field(0.6).unwrap();
    let v = frac_laplacian(&u, &Point::new(&[0.2, 0.1, -0.1]), 0.6, &c).unwrap().value;
    assert!((v - 1.0).abs() < 1e-5, "{v}");
}

/// The derivative on a ball of radius 2 picks up the 2 ln R · d term of
/// the scaled constant.
#[test]
fn derivative_on_a_larger_ball() {
    let d = Domain::ball(&[0.0, 0.0], 2.0).unwrap();
    let f = CompactField::constant(d.clone(), 1.0);
    let grid = radial_grid(&d, 6);
    let c = QuadConfig::default().with_tolerances(1e-7, 1e-10);
    let fam = TorsionFamily::new(d);
    for s in [0.5, 1.0] {
        let v = solve_vs(&f, s, &grid, &c).unwrap();
        for (x, got) in grid.iter().zip(v.values()) {
            let want = fam.s_derivative(s, x).unwrap();
            assert!((got - want).abs() < 1e-5 * want.abs(), "s = {s}, {x:?}: {got} vs {want}");
        }
    }
}
