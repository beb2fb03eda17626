//! Green functions, Poisson kernels and complementary Poisson kernels of
//! balls, with the operators 𝒢_s, 𝒫_s and 𝒫_s^c built from them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{CompactField, ScalarField};
use crate::geometry::Domain;
use crate::point::Point;
use crate::quadrature::{
    integrate, integrate_exterior_fn, integrate_graded, integrate_interior_fn, integrate_log_tail, sphere_integrate,
    EndpointDistance, IntegralResult, QuadConfig, Tol,
};
use crate::specfun::{ball_green_constant, ball_poisson_constant, incomplete_beta, log_constants, riesz_constant, sphere_area};

/// F_s(z) = κ_{N,s} |z|^{2s-N}.
pub fn fundamental_solution(n: usize, s: f64, z: &Point) -> Result<f64> {
    let k = riesz_constant(n, s)?;
    let r2 = z.norm_sq();
    if r2 == 0.0 {
        return Err(Error::Singularity("fundamental solution evaluated at the origin".into()));
    }
    Ok(k * r2.powf(s - n as f64 / 2.0))
}

/// G_s(x, y) of the origin-centred ball of the given radius.
pub fn green_ball(s: f64, x: &Point, y: &Point, radius: f64) -> Result<f64> {
    KernelFamily::new(&Domain::ball(&vec![0.0; x.dim()], radius)?, s)?.green(x, y)
}

/// P_s(z, y) of the origin-centred ball, s in (0, 1).
pub fn poisson_ball(s: f64, z: &Point, y: &Point, radius: f64) -> Result<f64> {
    KernelFamily::new(&Domain::ball(&vec![0.0; z.dim()], radius)?, s)?.poisson(z, y)
}

/// Classical Poisson kernel P_1(z, y) of the origin-centred ball, |y| = R.
pub fn poisson_ball_classical(z: &Point, y: &Point, radius: f64) -> Result<f64> {
    KernelFamily::new(&Domain::ball(&vec![0.0; z.dim()], radius)?, 1.0)?.poisson_classical(z, y)
}

/// Kernels of one ball at one order s ∈ (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    center: Point,
    radius: f64,
    s: f64,
    green_constant: f64,
    /// τ_{N,s}; absent at s = 1.
    tau: Option<f64>,
    c_n: f64,
}

impl KernelFamily {
    pub fn new(domain: &Domain, s: f64) -> Result<Self> {
        let (center, radius) = domain
            .as_ball()
            .ok_or_else(|| Error::Capability("Green and Poisson kernels are implemented for balls only".into()))?;
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Domain(format!("kernel order must lie in (0, 1], got {s}")));
        }
        let n = center.dim();
        let tau = if s < 1.0 { Some(ball_poisson_constant(n, s)?) } else { None };
        Ok(Self { center, radius, s, green_constant: ball_green_constant(n, s)?, tau, c_n: log_constants(n)?.0 })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn domain(&self) -> Domain {
        Domain::Ball { center: self.center, radius: self.radius }
    }

    /// R² - |p - c|², positive inside.
    fn gap(&self, p: &Point) -> f64 {
        let r = p.dist(&self.center);
        (self.radius - r) * (self.radius + r)
    }

    fn tau(&self) -> Result<f64> {
        self.tau.ok_or_else(|| Error::Domain("the fractional Poisson kernel needs s < 1; use the classical kernel".into()))
    }

    fn green_core(&self, gx: f64, gy: f64, d2: f64) -> Result<f64> {
        if gx <= 0.0 || gy <= 0.0 {
            return Ok(0.0);
        }
        if d2 == 0.0 {
            return Err(Error::Singularity("Green function evaluated on the diagonal".into()));
        }
        let n = self.dim();
        let r0 = gx * gy / (self.radius * self.radius * d2);
        if n == 2 && self.s == 1.0 {
            return Ok(r0.ln_1p() / (4.0 * PI));
        }
        let h = n as f64 / 2.0;
        let b = incomplete_beta(r0 / (1.0 + r0), 1.0 / (1.0 + r0), self.s, h - self.s)?;
        Ok(self.green_constant * d2.powf(self.s - h) * b)
    }

    /// G_s(x, y); zero unless both points are interior.
    pub fn green(&self, x: &Point, y: &Point) -> Result<f64> {
        self.green_core(self.gap(x), self.gap(y), (*x - *y).norm_sq())
    }

    /// P_s(z, y) = τ ((R² - |z|²)/(|y|² - R²))^s |z - y|^{-N} for z inside, y outside.
    pub fn poisson(&self, z: &Point, y: &Point) -> Result<f64> {
        let tau = self.tau()?;
        let gz = self.gap(z);
        let gy = -self.gap(y);
        if gz <= 0.0 {
            return Err(Error::Domain("Poisson kernel needs an interior first argument".into()));
        }
        if gy == 0.0 {
            return Err(Error::Singularity("Poisson kernel evaluated on the boundary".into()));
        }
        if gy < 0.0 {
            return Err(Error::Domain("Poisson kernel needs an exterior second argument".into()));
        }
        Ok(tau * (gz / gy).powf(self.s) * (*z - *y).norm().powi(-(self.dim() as i32)))
    }

    /// P_1(z, y) = (R² - |z|²)/(R |S^{N-1}| |z - y|^N) for y on the sphere.
    pub fn poisson_classical(&self, z: &Point, y: &Point) -> Result<f64> {
        if (y.dist(&self.center) - self.radius).abs() > 1e-10 * self.radius {
            return Err(Error::Domain("classical Poisson kernel needs a boundary point".into()));
        }
        let gz = self.gap(z);
        if gz <= 0.0 {
            return Err(Error::Domain("classical Poisson kernel needs an interior point".into()));
        }
        let n = self.dim();
        Ok(gz / (self.radius * sphere_area(n) * (*z - *y).norm().powi(n as i32)))
    }

    fn inner_tol(&self, cfg: &QuadConfig, scale: f64) -> Tol {
        Tol { rel: 0.25 * cfg.rel_tol, abs: 0.25 * cfg.abs_tol / scale, ..cfg.tol() }
    }

    /// Positive root t of |x + t ω - c| = R for interior x and unit ω, and
    /// the negative one.
    fn ray_roots(&self, x: &Point, w: &Point) -> (f64, f64) {
        let xl = *x - self.center;
        let b = w.dot(&xl);
        let g = self.gap(x);
        let disc = (b * b + g).sqrt();
        if b > 0.0 {
            let t0 = -(b + disc);
            (g / -t0, t0)
        } else {
            let t1 = disc - b;
            (t1, -g / t1)
        }
    }

    /// 𝒢_s f(x) = ∫_Ω G_s(x, y) f(y) dy in polar coordinates about x.
    pub fn green_apply<U: ScalarField + ?Sized>(&self, f: &U, x: &Point, cfg: &QuadConfig) -> Result<IntegralResult> {
        let n = self.dim();
        if self.gap(x) <= 0.0 {
            return Ok(IntegralResult::zero());
        }
        let s = self.s;
        let left = if n == 2 && s == 1.0 { 2.0 } else { 1.0 / (2.0 * s) };
        let right = (1.0 / s).min(6.0);
        let gx = self.gap(x);
        let tol = self.inner_tol(cfg, sphere_area(n));
        sphere_integrate(n, false, cfg.rel_tol, cfg.abs_tol, |w| {
            let (t1, t0) = self.ray_roots(x, w);
            integrate_graded(
                |r, dist| {
                    let gy = match dist {
                        EndpointDistance::Right(d) => d * (r - t0),
                        _ => (t1 - r) * (r - t0),
                    };
                    let y = *x + *w * r;
                    Ok(self.green_core(gx, gy, r * r)? * f.eval(&y) * r.powi(n as i32 - 1))
                },
                0.0,
                t1,
                left,
                right,
                &tol,
            )
        })
    }

    /// s-harmonic extension of exterior data g (s < 1) or harmonic extension
    /// of boundary data g (s = 1), evaluated at x.
    pub fn poisson_extend<U: ScalarField + ?Sized>(&self, g: &U, x: &Point, cfg: &QuadConfig) -> Result<IntegralResult> {
        let gx = self.gap(x);
        if gx <= 0.0 {
            return Ok(IntegralResult::exact(g.eval(x)));
        }
        let n = self.dim();
        let r2 = self.radius * self.radius;
        if self.s == 1.0 {
            return self.boundary_integral(cfg, |y| Ok(self.poisson_classical(x, y)? * g.eval(y)));
        }
        let tau = self.tau()?;
        integrate_exterior_fn(
            &self.domain(),
            |y, e| tau * (gx / (r2 * (2.0 + e))).powf(self.s) * (*x - *y).norm().powi(-(n as i32)) * g.eval(y),
            self.s,
            cfg,
        )
    }

    /// ∫_{∂B} φ dσ with boundary rules of doubling order.
    fn boundary_integral<F>(&self, cfg: &QuadConfig, phi: F) -> Result<IntegralResult>
    where
        F: Fn(&Point) -> Result<f64>,
    {
        let domain = self.domain();
        let (mut order, max_order) = if self.dim() == 2 { (32, 1 << 16) } else { (8, 512) };
        let mut prev: Option<f64> = None;
        let mut evaluations = 0;
        loop {
            let q = domain.boundary_quadrature(order)?;
            let mut sum = 0.0;
            for (p, w) in q.nodes.iter().zip(&q.weights) {
                sum += w * phi(p)?;
            }
            evaluations += q.nodes.len();
            if let Some(p) = prev {
                let diff = (sum - p).abs();
                let done = diff <= cfg.abs_tol.max(cfg.rel_tol * sum.abs());
                if done || order >= max_order {
                    return Ok(IntegralResult { value: sum, error_estimate: diff, evaluations, converged: done });
                }
            }
            prev = Some(sum);
            order *= 2;
        }
    }

    /// P_s^c(x, z) for interior x and z.
    pub fn comp_poisson_kernel(&self, x: &Point, z: &Point, cfg: &QuadConfig) -> Result<f64> {
        let (gx, gz) = (self.gap(x), self.gap(z));
        if gx <= 0.0 {
            return Err(Error::Domain("complementary Poisson kernel needs an interior point x".into()));
        }
        if gz == 0.0 {
            return Err(Error::Singularity("complementary Poisson kernel evaluated with z on the boundary".into()));
        }
        if gz < 0.0 {
            return Err(Error::Domain("complementary Poisson kernel needs an interior point z".into()));
        }
        let n = self.dim();
        let r2 = self.radius * self.radius;
        if n == 2 {
            let (xl, zl) = (*x - self.center, *z - self.center);
            let (rx, rz) = (xl.norm(), zl.norm());
            let cos = if rx > 0.0 && rz > 0.0 { xl.dot(&zl) / (rx * rz) } else { 0.0 };
            if self.s == 1.0 {
                let p = rx * rz / r2;
                return Ok(self.c_n * (1.0 - p * p) / (gx * (1.0 - 2.0 * p * cos + p * p)));
            }
            return Ok(self.c_n * self.tau()? * gz.powf(self.s) * self.disc_shell_integral(rx, rz, cos, cfg)?);
        }
        if self.s == 1.0 {
            let c_n = self.c_n;
            return Ok(self
                .boundary_integral(cfg, |y| Ok(c_n * self.poisson_classical(z, y)? * (*x - *y).norm().powi(-(n as i32))))?
                .value);
        }
        let k = self.c_n * self.tau()?;
        let r = integrate_exterior_fn(
            &self.domain(),
            |y, e| {
                k * (gz / (r2 * (2.0 + e))).powf(self.s)
                    * ((*z - *y).norm() * (*x - *y).norm()).powi(-(n as i32))
            },
            self.s,
            cfg,
        )?;
        Ok(r.value)
    }

    /// ∫_R^∞ (ρ² - R²)^{-s} ρ A(ρ) dρ where A(ρ) is the closed-form angular
    /// integral of |z - ρω|^{-2} |x - ρω|^{-2} over the circle.
    fn disc_shell_integral(&self, rx: f64, rz: f64, cos: f64, cfg: &QuadConfig) -> Result<f64> {
        let s = self.s;
        let big_r = self.radius;
        let angular = |rho: f64| {
            let p = rx * rz / (rho * rho);
            2.0 * PI * (1.0 - p * p)
                / ((rho - rz) * (rho + rz) * (rho - rx) * (rho + rx) * (1.0 - 2.0 * p * cos + p * p))
        };
        let q = 1.0 - s;
        let tol = self.inner_tol(cfg, 1.0);
        let shell = |t: f64| -> Result<f64> {
            let e = t.powf(1.0 / q);
            let rho = big_r * (1.0 + e);
            Ok((big_r * big_r * (2.0 + e)).powf(-s) * rho * angular(rho) * big_r / q)
        };
        // the angular factor varies on the scale of the gaps of x and z
        let mut breaks = vec![0.0];
        for r in [rz, rx] {
            let scale = (big_r - r) / big_r;
            if scale < 0.5 {
                breaks.push(scale.powf(q));
            }
        }
        breaks.push(1.0);
        breaks.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for win in breaks.windows(2) {
            if win[1] > win[0] {
                total += integrate(shell, win[0], win[1], &tol)?.value;
            }
        }
        let tail = integrate_log_tail(
            |rho| Ok(((rho - big_r) * (rho + big_r)).powf(-s) * rho * angular(rho)),
            2.0 * big_r,
            &tol,
        )?;
        Ok(total + tail.value)
    }

    /// 𝒫_s^c f(x). Radial data on the same ball use a one-dimensional
    /// reduction; otherwise the kernel is integrated against f.
    pub fn comp_poisson_apply(&self, f: &CompactField, x: &Point, cfg: &QuadConfig) -> Result<IntegralResult> {
        if self.gap(x) <= 0.0 {
            return Err(Error::Domain("complementary Poisson operator is evaluated at interior points".into()));
        }
        if let (Some(profile), Some((c, r))) = (f.radial_profile(), f.domain().as_ball()) {
            if c == self.center && r == self.radius {
                return self.comp_poisson_radial(|t| profile(t), x.dist(&self.center), cfg);
            }
        }
        let domain = f.domain().clone();
        let fdom = &domain;
        let err = std::sync::Mutex::new(None);
        let r = integrate_interior_fn(
            fdom,
            |z, _| match self.comp_poisson_kernel(x, z, &cfg.inner()) {
                Ok(k) => k * f.raw(z),
                Err(e) => {
                    *err.lock().expect("poisoned") = Some(e);
                    0.0
                }
            },
            0.0,
            cfg,
        )?;
        if let Some(e) = err.into_inner().expect("poisoned") {
            return Err(e);
        }
        Ok(r)
    }

    /// 𝒫_s^c f at distance `r` from the centre for f(z) = profile(|z - c|).
    pub fn comp_poisson_radial<F>(&self, profile: F, r: f64, cfg: &QuadConfig) -> Result<IntegralResult>
    where
        F: Fn(f64) -> f64,
    {
        let big_r = self.radius;
        if !(r >= 0.0 && r < big_r) {
            return Err(Error::Domain(format!("radius {r} is not interior")));
        }
        let n = self.dim();
        let s = self.s;
        let a = (big_r - r) * (big_r + r);
        let tol = self.inner_tol(cfg, 1.0);
        if s == 1.0 {
            let m = integrate(|t| Ok(profile(t) * t.powi(n as i32 - 1)), 0.0, big_r, &tol)?;
            return Ok(m.scale(2.0 * big_r.powi(2 - n as i32) / a));
        }
        let right = (1.0 / s).min(6.0);
        let pieces: Vec<(f64, f64)> = if r > 0.0 { vec![(0.0, r), (r, big_r)] } else { vec![(0.0, big_r)] };
        let mut total = IntegralResult::zero();
        for (lo, hi) in pieces {
            let piece = integrate_graded(
                |t, dist| {
                    let b = match dist {
                        EndpointDistance::Right(d) if hi == big_r => d * (2.0 * big_r - d),
                        _ => (big_r - t) * (big_r + t),
                    };
                    let k = if n == 2 {
                        disc_radial_kernel(s, a, b, (r - t) * (r + t))
                    } else {
                        2.0 * (PI * s).sin() / PI * b.powf(s) * self.radial_k(a, b, &tol)?
                    };
                    Ok(2.0 * profile(t) * t.powi(n as i32 - 1) * k)
                },
                lo,
                hi,
                1.0,
                if hi == big_r { right } else { 1.0 },
                &tol,
            )?;
            total = total.add(&piece);
        }
        Ok(total)
    }

    /// K_N(a, b) = ½ ∫_0^∞ X^{-s} (X + R²)^{(2-N)/2} / ((X + a)(X + b)) dX.
    fn radial_k(&self, a: f64, b: f64, tol: &Tol) -> Result<f64> {
        let s = self.s;
        let r2 = self.radius * self.radius;
        let expo = (2.0 - self.dim() as f64) / 2.0;
        let g = |x: f64| (x + r2).powf(expo) / ((x + a) * (x + b));
        let lo = a.min(b);
        if lo <= 0.0 {
            return Err(Error::Singularity("radial kernel evaluated on the boundary".into()));
        }
        let q = 1.0 - s;
        let near = integrate(|t| Ok(g(t.powf(1.0 / q)) / q), 0.0, lo.powf(q), tol)?;
        let far = integrate_log_tail(|x| Ok(x.powf(-s) * g(x)), lo, tol)?;
        Ok(0.5 * (near.value + far.value))
    }
}

/// expm1(s ln(b/a)) / (b - a) with b - a = `diff` supplied without cancellation.
fn disc_radial_kernel(s: f64, a: f64, b: f64, diff: f64) -> f64 {
    let x = diff / a;
    if x.abs() < 1e-8 {
        return s / a * (1.0 + 0.5 * (s - 1.0) * x);
    }
    let l = if x.abs() < 0.5 { x.ln_1p() } else { (b / a).ln() };
    (s * l).exp_m1() / diff
}

/// G_s applied to f on `domain` at x.
pub fn green_apply<U: ScalarField + ?Sized>(domain: &Domain, f: &U, s: f64, x: &Point, cfg: &QuadConfig) -> Result<IntegralResult> {
    KernelFamily::new(domain, s)?.green_apply(f, x, cfg)
}

pub fn poisson_extend<U: ScalarField + ?Sized>(domain: &Domain, g: &U, s: f64, x: &Point, cfg: &QuadConfig) -> Result<IntegralResult> {
    KernelFamily::new(domain, s)?.poisson_extend(g, x, cfg)
}

pub fn comp_poisson_kernel(domain: &Domain, s: f64, x: &Point, z: &Point, cfg: &QuadConfig) -> Result<f64> {
    KernelFamily::new(domain, s)?.comp_poisson_kernel(x, z, cfg)
}

pub fn comp_poisson_apply(domain: &Domain, f: &CompactField, s: f64, x: &Point, cfg: &QuadConfig) -> Result<IntegralResult> {
    KernelFamily::new(domain, s)?.comp_poisson_apply(f, x, cfg)
}
