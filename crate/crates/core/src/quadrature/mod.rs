//! Numerical integration engine: adaptive interior and exterior quadrature
//! over model domains, principal-value second-difference integrals, and a
//! seeded Monte Carlo path.

pub mod gauss_kronrod;
pub mod mc;
pub mod rules;
pub mod sphere;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, Smoothness, Support};
use crate::geometry::Domain;
use crate::point::Point;

pub use gauss_kronrod::{integrate, integrate_graded, integrate_to_infinity, EndpointDistance};
pub use sphere::{cone_integrate, sphere_integrate};

/// Tolerances for a single one-dimensional adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
    pub max_subdiv: usize,
    pub initial_segments: usize,
}

impl Tol {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs, max_subdiv: 400, initial_segments: 1 }
    }

    pub fn halved(&self) -> Self {
        Self { abs: 0.5 * self.abs, ..*self }
    }

    pub fn with_abs(&self, abs: f64) -> Self {
        Self { abs, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// False when the budget ran out before the tolerance was met.
    pub converged: bool,
}

impl IntegralResult {
    pub fn exact(value: f64) -> Self {
        Self { value, error_estimate: 0.0, evaluations: 1, converged: true }
    }

    pub fn add(&self, other: &IntegralResult) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { value: c * self.value, error_estimate: c.abs() * self.error_estimate, ..*self }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, error_estimate: 0.0, evaluations: 0, converged: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Method {
    #[default]
    Deterministic,
    MonteCarlo,
}

/// The single knob governing numerical error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdiv: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Radius of the principal-value inner ball as a fraction of δ(x).
    pub pv_inner_radius: f64,
    pub method: Method,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_subdiv: 400,
            mc_samples: 200_000,
            seed: 0x5eed,
            pv_inner_radius: 0.25,
            method: Method::Deterministic,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if self.mc_samples < 1000 {
            return Err(Error::Domain("mc_samples must be at least 1000".into()));
        }
        if !(self.pv_inner_radius > 0.0 && self.pv_inner_radius <= 0.5) {
            return Err(Error::Domain("pv_inner_radius must lie in (0, 0.5]".into()));
        }
        if self.max_subdiv < 1 {
            return Err(Error::Domain("max_subdiv must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tolerances(&self, rel: f64, abs: f64) -> Self {
        Self { rel_tol: rel, abs_tol: abs, ..self.clone() }
    }

    /// Configuration for integrals nested inside an outer quadrature.
    pub fn inner(&self) -> Self {
        self.with_tolerances(0.1 * self.rel_tol, 0.1 * self.abs_tol)
    }

    pub fn tol(&self) -> Tol {
        Tol { rel: self.rel_tol, abs: self.abs_tol, max_subdiv: self.max_subdiv, initial_segments: 1 }
    }
}

/// Node clustering power for one-sided behaviour dist^β at a breakpoint;
/// β < 0 marks an integrable singularity.
pub(crate) fn grading_power(beta: f64) -> f64 {
    if beta > 0.0 && beta < 1.0 {
        (1.0 / beta).min(6.0)
    } else if beta < 0.0 && beta > -1.0 {
        (1.0 / (1.0 + beta)).min(6.0)
    } else {
        1.0
    }
}

/// ∫_a^∞ g through r = a e^v, which turns algebraic decay into exponential.
pub(crate) fn integrate_log_tail<F>(mut g: F, a: f64, tol: &Tol) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    debug_assert!(a > 0.0);
    integrate_to_infinity(
        |v| {
            if v > 700.0 {
                return Ok(0.0);
            }
            let r = a * v.exp();
            Ok(g(r)? * r)
        },
        0.0,
        tol,
    )
}

/// Sum of adaptive integrals over consecutive pieces of `breaks`; pieces
/// touching an index in `graded` are clustered toward that point.
pub(crate) fn integrate_pieces<F>(
    mut f: F,
    breaks: &[f64],
    graded: &[bool],
    power: f64,
    tol: &Tol,
) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut total = IntegralResult::zero();
    let pieces = breaks.len().saturating_sub(1).max(1);
    let piece_tol = tol.with_abs(tol.abs / pieces as f64);
    for k in 0..breaks.len().saturating_sub(1) {
        let (a, b) = (breaks[k], breaks[k + 1]);
        if b <= a {
            continue;
        }
        let lp = if graded[k] { power } else { 1.0 };
        let rp = if graded[k + 1] { power } else { 1.0 };
        let r = integrate_graded(|x, _| f(x), a, b, lp, rp, &piece_tol)?;
        total = total.add(&r);
    }
    Ok(total)
}

/// Distances r > 0 at which x ± r ω crosses the boundary of `d`.
pub(crate) fn crossings(d: &Domain, x: &Point, dir: &Point) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some((t0, t1)) = d.ray_interval(x, dir) {
        for t in [t0, t1] {
            if t.abs() > 0.0 {
                out.push(t.abs());
            }
        }
    }
    out
}

/// Breakpoints along the symmetric pair of rays from `x` for a field.
pub(crate) fn field_breaks<U: ScalarField + ?Sized>(u: &U, x: &Point, dir: &Point) -> (Vec<f64>, Option<f64>) {
    let mut breaks = Vec::new();
    if let Some(d) = u.interface() {
        breaks.extend(crossings(&d, x, dir));
    }
    // radius beyond which both rays have left a compact support
    let outer = match u.support() {
        Support::Compact(d) => {
            let c = crossings(&d, x, dir);
            breaks.extend(c.iter().cloned());
            Some(c.into_iter().fold(0.0, f64::max))
        }
        _ => None,
    };
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    (breaks, outer)
}

pub(crate) fn check_integrand(point: &Point, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { point: point.as_slice().to_vec(), value: v })
    }
}

/// ∫_Ω d^{-a} f(y, d) dy by a polar product rule on the preimage unit ball,
/// where d = 1 - |u| is the preimage distance of y to ∂Ω (d = 1 - |y - c|/R
/// on a ball). The radial variable is t = d^{1-a}, so a factored boundary
/// singularity of order a < 1 costs nothing.
pub fn integrate_interior_fn<F>(domain: &Domain, f: F, a: f64, cfg: &QuadConfig) -> Result<IntegralResult>
where
    F: Fn(&Point, f64) -> f64 + Sync,
{
    if a >= 1.0 {
        return Err(Error::Divergence(format!("boundary singularity of order {a} is not integrable")));
    }
    if cfg.method == Method::MonteCarlo {
        return mc::mc_interior(domain, &f, a, cfg);
    }
    let n = domain.dim();
    let jac = domain.unit_jacobian();
    let q = 1.0 - a;
    let tol = Tol::new(0.25 * cfg.rel_tol, 0.25 * cfg.abs_tol / jac).with_max(cfg.max_subdiv);
    let r = sphere_integrate(n, false, cfg.rel_tol, cfg.abs_tol / jac, |w| {
        integrate(
            |t| {
                let d = t.powf(1.0 / q);
                let rho = 1.0 - d;
                let y = domain.from_unit(&(*w * rho));
                check_integrand(&y, f(&y, d) * rho.powi(n as i32 - 1) / q)
            },
            0.0,
            1.0,
            &tol,
        )
    })?;
    Ok(r.scale(jac))
}

pub fn integrate_interior<U: ScalarField + ?Sized>(domain: &Domain, f: &U, cfg: &QuadConfig) -> Result<IntegralResult> {
    integrate_interior_fn(domain, |y, _| f.eval(y), 0.0, cfg)
}

/// Tail probe: |f| r^N must decay along the coordinate axes.
fn probe_tail<F>(domain: &Domain, f: &F) -> Result<()>
where
    F: Fn(&Point, f64) -> f64,
{
    let n = domain.dim();
    let c = domain.center();
    let scale = domain.diameter();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let at = |r: f64| f(&(c + Point::axis(n, i, sign * r * scale)), r).abs() * r.powi(n as i32);
            let (near, far) = (at(1e3), at(1e6));
            if !far.is_finite() || (far > 0.0 && far >= 0.9 * near) {
                return Err(Error::Divergence(format!(
                    "integrand does not decay faster than |y|^-{n} at infinity (probe ratio {:.3})",
                    if near > 0.0 { far / near } else { f64::INFINITY }
                )));
            }
        }
    }
    Ok(())
}

/// ∫_{R^N∖Ω} e^{-a} f(y, e) dy with e = |u| - 1 the preimage excess of y
/// (e = |y - c|/R - 1 on a ball): a shell e < 1 in the variable t = e^{1-a}
/// and a logarithmic radial tail beyond.
pub fn integrate_exterior_fn<F>(domain: &Domain, f: F, a: f64, cfg: &QuadConfig) -> Result<IntegralResult>
where
    F: Fn(&Point, f64) -> f64 + Sync,
{
    if a >= 1.0 {
        return Err(Error::Divergence(format!("boundary singularity of order {a} is not integrable")));
    }
    probe_tail(domain, &f)?;
    if cfg.method == Method::MonteCarlo {
        return mc::mc_exterior(domain, &f, a, cfg);
    }
    let n = domain.dim();
    let jac = domain.unit_jacobian();
    let q = 1.0 - a;
    let tol = Tol::new(0.25 * cfg.rel_tol, 0.25 * cfg.abs_tol / jac).with_max(cfg.max_subdiv);
    let r = sphere_integrate(n, false, cfg.rel_tol, cfg.abs_tol / jac, |w| {
        let shell = integrate(
            |t| {
                let e = t.powf(1.0 / q);
                let rho = 1.0 + e;
                let y = domain.from_unit(&(*w * rho));
                check_integrand(&y, f(&y, e) * rho.powi(n as i32 - 1) / q)
            },
            0.0,
            1.0,
            &tol,
        )?;
        let tail = integrate_log_tail(
            |rho| {
                let y = domain.from_unit(&(*w * rho));
                let e = rho - 1.0;
                check_integrand(&y, e.powf(-a) * f(&y, e) * rho.powi(n as i32 - 1))
            },
            2.0,
            &tol,
        )?;
        Ok(shell.add(&tail))
    })?;
    Ok(r.scale(jac))
}

pub fn integrate_exterior<U: ScalarField + ?Sized>(domain: &Domain, f: &U, cfg: &QuadConfig) -> Result<IntegralResult> {
    integrate_exterior_fn(domain, |y, _| f.eval(y), 0.0, cfg)
}

impl Tol {
    fn with_max(mut self, max_subdiv: usize) -> Self {
        self.max_subdiv = max_subdiv;
        self
    }
}

/// Distance from x to the set where `u` may lose smoothness.
pub(crate) fn interface_distance<U: ScalarField + ?Sized>(u: &U, x: &Point) -> f64 {
    u.interface().map(|d| d.delta(x).abs()).unwrap_or(f64::INFINITY)
}

/// ∫_{R^N} (2u(x) - u(x+z) - u(x-z)) / (2|z|^{N+2s}) dz.
///
/// Inside B_ε(x), ε = pv_inner_radius·δ, the radial variable is t = r^{2-2s}
/// and the quotient of the second difference by r² is frozen below 1e-3 ε.
pub fn integrate_pv_second_difference<U: ScalarField + ?Sized>(
    u: &U,
    x: &Point,
    s: f64,
    cfg: &QuadConfig,
) -> Result<IntegralResult> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("principal-value order must lie in (0,1), got {s}")));
    }
    if u.smoothness() != Smoothness::C2Interior {
        return Err(Error::Contract("principal-value evaluation requires C² metadata".into()));
    }
    let n = u.dim();
    let dist = interface_distance(u, x);
    if dist <= 1e-13 {
        return Err(Error::Contract(format!("point {:?} lies on the non-smooth interface", x.as_slice())));
    }
    let eps = cfg.pv_inner_radius * dist.min(1.0);
    let q = 2.0 - 2.0 * s;
    let floor = 1e-3 * eps;
    let ux = u.eval(x);
    let power = grading_power(u.interface_exponent());
    let tol = Tol::new(0.25 * cfg.rel_tol, 0.1 * cfg.abs_tol).with_max(cfg.max_subdiv);
    let second = |w: &Point, r: f64| -> f64 { -(u.increment(x, &(*w * r)) + u.increment(x, &(*w * -r))) };

    sphere_integrate(n, true, cfg.rel_tol, cfg.abs_tol, |w| {
        let inner = integrate(
            |t| {
                let r = t.powf(1.0 / q).max(floor);
                Ok(second(w, r) / (r * r) / (2.0 * q))
            },
            0.0,
            eps.powf(q),
            &tol,
        )?;
        let (mut breaks, outer) = field_breaks(u, x, w);
        breaks.retain(|&b| b > eps);
        let mut pts = vec![eps];
        let mut graded = vec![false];
        for b in &breaks {
            pts.push(*b);
            graded.push(true);
        }
        let integrand = |r: f64| -> Result<f64> {
            let v = second(w, r) / (2.0 * r.powf(1.0 + 2.0 * s));
            check_integrand(x, v)
        };
        let mid = integrate_pieces(integrand, &pts, &graded, power, &tol)?;
        let last = *pts.last().expect("nonempty");
        let tail = match outer {
            Some(rmax) if rmax <= last => IntegralResult::exact(ux * last.powf(-2.0 * s) / (2.0 * s)),
            _ => integrate_log_tail(integrand, last, &tol)?,
        };
        Ok(inner.add(&mid).add(&tail))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::specfun::ball_torsion_constant;
    use std::f64::consts::PI;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn disc_volume_and_moments() {
        let d = Domain::unit_ball(2);
        let one = integrate_interior_fn(&d, |_, _| 1.0, 0.0, &cfg()).unwrap();
        assert!((one.value - PI).abs() < 1e-8);
        let m2 = integrate_interior_fn(&d, |y, _| y.norm_sq(), 0.0, &cfg()).unwrap();
        assert!((m2.value - PI / 2.0).abs() < 1e-8);
    }

    #[test]
    fn boundary_singular_interior_integrand() {
        let d = Domain::unit_ball(2);
        let r = integrate_interior_fn(&d, |_, _| 1.0, 0.5, &cfg()).unwrap();
        assert!((r.value - 8.0 * PI / 3.0).abs() < 1e-8, "{}", r.value);
        // unfactored form: plain adaptive rule on the raw singular integrand
        let raw = integrate_interior_fn(&d, |y, _| d.delta(y).powf(-0.5), 0.0, &cfg()).unwrap();
        assert!((raw.value - 8.0 * PI / 3.0).abs() < 1e-4, "{}", raw.value);
    }

    #[test]
    fn exterior_reference_integrals() {
        let d = Domain::unit_ball(2);
        let a = integrate_exterior_fn(&d, |y, _| y.norm_sq().powi(-2), 0.0, &cfg()).unwrap();
        assert!((a.value - PI).abs() < 1e-7);
        let b = integrate_exterior_fn(&d, |y, e| 1.0 / (y.norm_sq() * (2.0 + e).sqrt()), 0.5, &cfg()).unwrap();
        assert!((b.value - PI * PI).abs() < 1e-6, "{}", b.value);
    }

    #[test]
    fn non_decaying_exterior_integrand_is_divergent() {
        let d = Domain::unit_ball(2);
        let e = integrate_exterior_fn(&d, |y, _| 1.0 / y.norm_sq(), 0.0, &cfg()).unwrap_err();
        assert!(matches!(e, Error::Divergence(_)));
    }

    #[test]
    fn ellipsoid_volume_through_map() {
        let d = Domain::parse("ellipsoid:1,0.3,4", 2).unwrap();
        let v = integrate_interior_fn(&d, |_, _| 1.0, 0.0, &cfg()).unwrap();
        assert!((v.value - d.volume()).abs() < 1e-8);
    }

    #[test]
    fn pv_of_constant_and_linear_fields_vanish() {
        let one = FnField::constant(2, 1.0);
        let r = integrate_pv_second_difference(&one, &Point::new(&[0.3, 0.1]), 0.4, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
        let lin = FnField::new(2, |y| y[0]).with_increment(|_, z| z[0]);
        let r = integrate_pv_second_difference(&lin, &Point::zeros(2), 0.7, &cfg()).unwrap();
        assert!(r.value.abs() < 1e-14);
    }

    #[test]
    fn pv_of_disc_torsion_reproduces_constant() {
        let d = Domain::unit_ball(2);
        let s = 0.5;
        let u = FnField::new(2, move |y: &Point| (1.0 - y.norm_sq()).max(0.0).powf(s))
            .with_support(Support::Compact(d.clone()))
            .with_interface(d.clone(), s);
        let r = integrate_pv_second_difference(&u, &Point::zeros(2), s, &cfg()).unwrap();
        let c = crate::specfun::frac_normalization(2, s).unwrap();
        let (dns, _) = ball_torsion_constant(2, s).unwrap();
        assert!((c * r.value - 1.0 / dns).abs() < 1e-5, "{}", c * r.value);
    }
}
