//! Bounds on the operator norm of the Green operator 𝒢_s: m_s(Ω), p_s(Ω)
//! and its explicit lower bound, the constant q_{N,s}, and the chain
//! ‖𝒢_s‖ ≤ exp(-∫_0^s m_τ dτ) ≤ bound_new ≤ bound_old.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernels::KernelFamily;
use crate::operators::h_omega;
use crate::point::Point;
use crate::quadrature::{integrate, QuadConfig, Tol};
use crate::specfun::{ball_torsion_constant, gamma, log_constants};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub s: f64,
    pub norm_numeric: f64,
    pub bound_integral: f64,
    pub bound_new: f64,
    pub bound_old: f64,
    pub m_s: f64,
    pub p_s_numeric: f64,
    pub p_s_lower: f64,
    pub q_ns: f64,
}

impl BoundReport {
    /// norm_numeric ≤ bound_integral ≤ bound_new ≤ bound_old.
    pub fn chain_holds(&self) -> bool {
        self.norm_numeric <= self.bound_integral && self.bound_integral <= self.bound_new && self.bound_new <= self.bound_old
    }
}

/// (3^τ Γ(N/2) / (2^N Γ(τ) Γ(N/2 + 1 - τ)))^{N/(N-2τ)}, zero at τ = 0 and
/// at τ = N/2 when the base is below one.
fn q_integrand(n: usize, tau: f64) -> Result<f64> {
    if tau <= 0.0 {
        return Ok(0.0);
    }
    let nh = 0.5 * n as f64;
    let base = 3f64.powf(tau) * gamma(nh)? / (2f64.powi(n as i32) * gamma(tau)? * gamma(nh + 1.0 - tau)?);
    let gap = n as f64 - 2.0 * tau;
    if gap <= 0.0 {
        return Ok(if base < 1.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(base.powf(n as f64 / gap))
}

fn check(n: usize, s: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension must be at least 2, got {n}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("order must lie in (0, 1], got {s}")));
    }
    Ok(())
}

/// q_{N,s} = c_N ∫_0^s (3^τ Γ(N/2)/(2^N Γ(τ) Γ(N/2+1-τ)))^{N/(N-2τ)} dτ.
pub fn q_constant(n: usize, s: f64, cfg: &QuadConfig) -> Result<f64> {
    check(n, s)?;
    let (c_n, _) = log_constants(n)?;
    let tol = Tol { rel: cfg.rel_tol.min(1e-10), abs: cfg.abs_tol.min(1e-13), ..cfg.tol() };
    Ok(c_n * integrate(|t| q_integrand(n, t), 0.0, s, &tol)?.value)
}

/// The same constant by adaptive Simpson, an independent rule for cross-checks.
pub fn q_constant_simpson(n: usize, s: f64, eps: f64) -> Result<f64> {
    check(n, s)?;
    let (c_n, _) = log_constants(n)?;
    let f = |t: f64| q_integrand(n, t);
    let (fa, fm, fb) = (f(0.0)?, f(0.5 * s)?, f(s)?);
    let whole = s / 6.0 * (fa + 4.0 * fm + fb);
    Ok(c_n * simpson(&f, 0.0, s, fa, fm, fb, whole, eps, 50)?)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)? + simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?)
}

/// |Ω| diam(Ω)^{-N}.
fn shape_factor(domain: &Domain) -> f64 {
    domain.volume() * domain.diameter().powi(-(domain.dim() as i32))
}

/// Explicit lower bound for p_s(Ω) = inf_Ω 𝒫_s^c 1; at s = 1 the classical
/// bound c_N |Ω| diam(Ω)^{-N}.
pub fn p_s_lower(domain: &Domain, s: f64) -> Result<f64> {
    let n = domain.dim();
    check(n, s)?;
    let (c_n, _) = log_constants(n)?;
    let factor = if s == 1.0 { 1.0 } else { q_integrand(n, s)? };
    Ok(c_n * factor * shape_factor(domain))
}

fn ball_of(domain: &Domain) -> Result<(Point, f64)> {
    domain.as_ball().ok_or_else(|| Error::Capability("bounds are offered on balls only".into()))
}

/// Minimum of g over [0, R) from a radial grid (uniform, then log-spaced
/// in δ towards the boundary) refined by golden-section search.
fn radial_min<G>(radius: f64, g: G) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let mut radii: Vec<f64> = (0..19).map(|k| 0.05 * k as f64 * radius).collect();
    for k in 0..9 {
        radii.push(radius * (1.0 - 0.1 * 10f64.powf(-0.5 * k as f64)));
    }
    let values: Result<Vec<f64>> = radii.iter().map(|&r| g(r)).collect();
    let values = values?;
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let lo = if best == 0 { 0.0 } else { radii[best - 1] };
    let hi = radii.get(best + 1).copied().unwrap_or(radii[best]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    for _ in 0..40 {
        if b - a <= 1e-7 * radius {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d)?;
        }
    }
    let candidates = [(radii[best], values[best]), (c, gc), (d, gd)];
    Ok(candidates.into_iter().fold((0.0, f64::INFINITY), |acc, (r, v)| if v < acc.1 { (r, v) } else { acc }))
}

fn comp_one(domain: &Domain, s: f64, r: f64, cfg: &QuadConfig) -> Result<f64> {
    Ok(KernelFamily::new(domain, s)?.comp_poisson_radial(|_| 1.0, r, cfg)?.value)
}

fn h_at(domain: &Domain, centre: &Point, r: f64, cfg: &QuadConfig) -> Result<f64> {
    h_omega(domain, &(*centre + Point::axis(domain.dim(), 0, r)), cfg)
}

/// p_s(Ω) = inf_Ω 𝒫_s^c 1 on a ball.
pub fn p_s_numeric(domain: &Domain, s: f64, cfg: &QuadConfig) -> Result<f64> {
    check(domain.dim(), s)?;
    let (_, radius) = ball_of(domain)?;
    Ok(radial_min(radius, |r| comp_one(domain, s, r, cfg))?.1)
}

/// min_Ω h_Ω on a ball.
pub fn min_h(domain: &Domain, cfg: &QuadConfig) -> Result<f64> {
    let (centre, radius) = ball_of(domain)?;
    Ok(radial_min(radius, |r| h_at(domain, &centre, r, cfg))?.1)
}

/// m_s(Ω) = ρ_N + inf_Ω (h_Ω + 𝒫_s^c 1); for s = 0 the Poisson term is absent.
pub fn m_s(domain: &Domain, s: f64, cfg: &QuadConfig) -> Result<f64> {
    let (centre, radius) = ball_of(domain)?;
    let (_, rho) = log_constants(domain.dim())?;
    if s == 0.0 {
        return Ok(rho + min_h(domain, cfg)?);
    }
    check(domain.dim(), s)?;
    Ok(rho + radial_min(radius, |r| Ok(h_at(domain, &centre, r, cfg)? + comp_one(domain, s, r, cfg)?))?.1)
}

/// All quantities of the norm bound at order s, with m_τ integrated by the
/// trapezoid rule on `steps` equal τ-intervals.
pub fn green_norm_bound_with(domain: &Domain, s: f64, steps: usize, cfg: &QuadConfig) -> Result<BoundReport> {
    let n = domain.dim();
    check(n, s)?;
    let (_, radius) = ball_of(domain)?;
    let (_, rho) = log_constants(n)?;
    let (d, _) = ball_torsion_constant(n, s)?;
    let norm_numeric = d * radius.powf(2.0 * s);
    let base = rho + min_h(domain, cfg)?;
    let steps = steps.max(1);
    let mut integral = 0.0;
    let mut prev = base;
    let mut m_top = base;
    for k in 1..=steps {
        let tau = s * k as f64 / steps as f64;
        let m = m_s(domain, tau, cfg)?;
        integral += 0.5 * (prev + m) * s / steps as f64;
        prev = m;
        m_top = m;
    }
    let q_ns = q_constant(n, s, cfg)?;
    Ok(BoundReport {
        s,
        norm_numeric,
        bound_integral: (-integral).exp(),
        bound_new: (-s * base - q_ns * shape_factor(domain)).exp(),
        bound_old: (-s * base).exp(),
        m_s: m_top,
        p_s_numeric: p_s_numeric(domain, s, cfg)?,
        p_s_lower: p_s_lower(domain, s)?,
        q_ns,
    })
}

pub fn green_norm_bound(domain: &Domain, s: f64, cfg: &QuadConfig) -> Result<BoundReport> {
    green_norm_bound_with(domain, s, 16, cfg)
}
