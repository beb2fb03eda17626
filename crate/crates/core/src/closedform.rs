//! Exact torsion functions u_s = c_{s,A} (1 - Ax·x)_+^s on balls and
//! ellipsoids, solving (-Δ)^s u_s = 1, together with their s-derivatives.

use crate::error::{Error, Result};
use crate::field::{ScalarField, Smoothness, Support};
use crate::geometry::Domain;
use crate::point::Point;
use crate::quadrature::sphere_integrate;
use crate::quadrature::IntegralResult;
use crate::specfun::{ball_torsion_constant, sphere_area};

/// The torsion family of one ball or ellipsoid, indexed by the order s > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionFamily {
    domain: Domain,
}

impl TorsionFamily {
    pub fn new(domain: Domain) -> Self {
        Self { domain }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::new(Domain::unit_ball(dim))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn ball_data(&self) -> Option<(Point, f64)> {
        match &self.domain {
            Domain::Ball { center, radius } => Some((*center, *radius)),
            Domain::Ellipsoid(e) => {
                let ev = e.eigenvalues();
                let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
                (hi - lo <= 1e-14 * hi).then(|| (Point::zeros(e.dim()), 1.0 / lo.sqrt()))
            }
        }
    }

    /// w(x) = 1 - Ax·x, formed as (R - r)(R + r)/R² on balls.
    pub fn weight(&self, x: &Point) -> f64 {
        match self.ball_data() {
            Some((c, r)) => {
                let d = x.dist(&c);
                (r - d) * (r + d) / (r * r)
            }
            None => match &self.domain {
                Domain::Ellipsoid(e) => 1.0 - e.quadratic_form(x),
                Domain::Ball { .. } => unreachable!(),
            },
        }
    }

    /// Change of w between x and x + z without cancellation.
    fn weight_increment(&self, x: &Point, z: &Point) -> f64 {
        match self.ball_data() {
            Some((c, r)) => -(2.0 * (*x - c).dot(z) + z.norm_sq()) / (r * r),
            None => match &self.domain {
                Domain::Ellipsoid(e) => -(2.0 * e.apply(x).dot(z) + e.quadratic_form(z)),
                Domain::Ball { .. } => unreachable!(),
            },
        }
    }

    /// (c_{s,A}, ∂_s c_{s,A}).
    pub fn constant(&self, s: f64) -> Result<(f64, f64)> {
        let n = self.dim();
        let (d, dd) = ball_torsion_constant(n, s)?;
        if let Some((_, r)) = self.ball_data() {
            let scale = r.powf(2.0 * s);
            return Ok((d * scale, (dd + 2.0 * d * r.ln()) * scale));
        }
        if s > 1.0 {
            return Err(Error::Capability(format!(
                "anisotropic torsion constant is only available for s in (0, 1], got {s}"
            )));
        }
        let Domain::Ellipsoid(e) = &self.domain else { unreachable!() };
        // spherical means of (Aω·ω)^s and (Aω·ω)^s ln(Aω·ω)
        let mean = |log: bool| -> Result<f64> {
            let r = sphere_integrate(n, true, 1e-13, 1e-15, |w| {
                let q = e.quadratic_form(w);
                let v = q.powf(s);
                Ok(IntegralResult::exact(if log { v * q.ln() } else { v }))
            })?;
            Ok(r.value / sphere_area(n))
        };
        let (m, dm) = (mean(false)?, mean(true)?);
        Ok((d / m, dd / m - d * dm / (m * m)))
    }

    pub fn value(&self, s: f64, x: &Point) -> Result<f64> {
        let (c, _) = self.constant(s)?;
        let w = self.weight(x);
        Ok(if w > 0.0 { c * w.powf(s) } else { 0.0 })
    }

    /// ∂_s u_s(x) = ∂_s c · w^s + c · w^s ln w; zero on and outside the boundary.
    pub fn s_derivative(&self, s: f64, x: &Point) -> Result<f64> {
        let (c, dc) = self.constant(s)?;
        let w = self.weight(x);
        if w <= 0.0 {
            return Ok(0.0);
        }
        let ws = w.powf(s);
        Ok(dc * ws + c * ws * w.ln())
    }

    /// u_s as a field usable by the operators.
    pub fn field(&self, s: f64) -> Result<TorsionField> {
        let (c, _) = self.constant(s)?;
        Ok(TorsionField { family: self.clone(), s, c })
    }
}

/// c_{s,A}(1 - Ax·x)^s_+ on `domain`.
pub fn torsion_value(domain: &Domain, s: f64, x: &Point) -> Result<f64> {
    TorsionFamily::new(domain.clone()).value(s, x)
}

pub fn torsion_s_derivative(domain: &Domain, s: f64, x: &Point) -> Result<f64> {
    TorsionFamily::new(domain.clone()).s_derivative(s, x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorsionField {
    family: TorsionFamily,
    s: f64,
    c: f64,
}

impl TorsionField {
    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn family(&self) -> &TorsionFamily {
        &self.family
    }
}

impl ScalarField for TorsionField {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn eval(&self, x: &Point) -> f64 {
        let w = self.family.weight(x);
        if w > 0.0 {
            self.c * w.powf(self.s)
        } else {
            0.0
        }
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C2Interior
    }

    fn support(&self) -> Support {
        Support::Compact(self.family.domain.clone())
    }

    fn interface_exponent(&self) -> f64 {
        self.s.min(1.0)
    }

    fn increment(&self, x: &Point, z: &Point) -> f64 {
        let w = self.family.weight(x);
        let y = *x + *z;
        let wy = self.family.weight(&y);
        if w > 0.0 && wy > 0.0 {
            let ratio = self.family.weight_increment(x, z) / w;
            if ratio <= -1.0 {
                // y sits on the boundary up to rounding
                return -self.eval(x);
            }
            self.c * w.powf(self.s) * (self.s * ratio.ln_1p()).exp_m1()
        } else {
            self.eval(&y) - self.eval(x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ellipsoid;
    use proptest::prelude::*;

    #[test]
    fn disc_anchor_values() {
        let t = TorsionFamily::unit_ball(2);
        assert!((t.value(1.0, &Point::zeros(2)).unwrap() - 0.25).abs() < 1e-15);
        let x = Point::new(&[0.75f64.sqrt(), 0.0]);
        assert!((t.value(0.5, &x).unwrap() - 0.318_309_886_183_790_7).abs() < 1e-12);
        assert_eq!(t.value(0.5, &Point::new(&[1.2, 0.0])).unwrap(), 0.0);
        let v1 = t.s_derivative(1.0, &Point::zeros(2)).unwrap();
        assert!((v1 + 0.557_965_757_829_206_2).abs() < 1e-12);
        let vh = t.s_derivative(0.5, &Point::zeros(2)).unwrap();
        assert!((vh + 0.929_002_878_466_487_1).abs() < 1e-12);
        assert_eq!(t.s_derivative(1.0, &Point::new(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn s_derivative_matches_difference_quotient() {
        let e = Domain::Ellipsoid(Ellipsoid::diagonal(&[1.0, 4.0]).unwrap());
        for fam in [TorsionFamily::unit_ball(3), TorsionFamily::new(Domain::ball(&[0.2, 0.0], 1.7).unwrap()), TorsionFamily::new(e)] {
            let x = Point::new(&vec![0.1, 0.3, 0.2][..fam.dim()]);
            for s in [0.3, 0.7] {
                let h = 1e-5;
                let fd = (fam.value(s + h, &x).unwrap() - fam.value(s - h, &x).unwrap()) / (2.0 * h);
                let an = fam.s_derivative(s, &x).unwrap();
                assert!((fd - an).abs() < 1e-7 * an.abs().max(1.0), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn isotropic_ellipsoid_reduces_to_ball() {
        let e = TorsionFamily::new(Domain::Ellipsoid(Ellipsoid::diagonal(&[4.0, 4.0]).unwrap()));
        let b = TorsionFamily::new(Domain::ball(&[0.0, 0.0], 0.5).unwrap());
        let x = Point::new(&[0.1, -0.2]);
        assert!((e.value(1.5, &x).unwrap() - b.value(1.5, &x).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn anisotropic_constant_at_s_one_matches_laplacian() {
        // -Δ[c (1 - Ax·x)] = 2c tr A
        let e = Ellipsoid::diagonal(&[1.0, 4.0, 9.0]).unwrap();
        let tr = e.trace();
        let t = TorsionFamily::new(Domain::Ellipsoid(e));
        let (c, _) = t.constant(1.0).unwrap();
        assert!((2.0 * c * tr - 1.0).abs() < 1e-12);
        assert!(matches!(t.constant(1.5), Err(Error::Capability(_))));
    }

    #[test]
    fn center_value_decreases_in_s() {
        for n in [2, 3] {
            let t = TorsionFamily::unit_ball(n);
            let mut prev = f64::INFINITY;
            for k in 1..=20 {
                let v = t.value(k as f64 * 0.05, &Point::zeros(n)).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn increment_matches_subtraction(x in -0.9f64..0.9, y in -0.4f64..0.4, zx in -0.3f64..0.3, zy in -0.3f64..0.3, s in 0.1f64..2.0) {
            let f = TorsionFamily::unit_ball(2).field(s).unwrap();
            let p = Point::new(&[x, y]);
            let z = Point::new(&[zx, zy]);
            let direct = f.eval(&(p + z)) - f.eval(&p);
            prop_assert!((f.increment(&p, &z) - direct).abs() < 1e-12);
        }
    }
}
