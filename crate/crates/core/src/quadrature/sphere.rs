//! Integration over directions: nested trapezoid rules on the circle,
//! Gauss–Legendre × trapezoid products on the sphere, and cones around an axis.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::gauss_kronrod::integrate;
use super::rules::gauss_legendre;
use super::{IntegralResult, Tol};
use crate::error::{Error, Result};
use crate::point::Point;

const MAX_CIRCLE_NODES: usize = 4096;
const MAX_SPHERE_LEVEL: usize = 96;

fn evaluate_all<F>(dirs: &[(Point, f64)], f: &F) -> Result<Vec<IntegralResult>>
where
    F: Fn(&Point) -> Result<IntegralResult> + Sync,
{
    dirs.par_iter().map(|(w, _)| f(w)).collect()
}

fn weighted_sum(dirs: &[(Point, f64)], vals: &[IntegralResult]) -> IntegralResult {
    let mut out = IntegralResult::zero();
    for ((_, wt), v) in dirs.iter().zip(vals) {
        out = out.add(&v.scale(*wt));
    }
    out
}

/// ∫_{S^{N-1}} f(ω) dω. With `symmetric`, f(ω) = f(-ω) is assumed and only
/// a half-sphere is sampled. Resolution doubles until successive rules agree.
pub fn sphere_integrate<F>(dim: usize, symmetric: bool, rel: f64, abs: f64, f: F) -> Result<IntegralResult>
where
    F: Fn(&Point) -> Result<IntegralResult> + Sync,
{
    match dim {
        2 => circle(symmetric, rel, abs, &f),
        3 => sphere3(symmetric, rel, abs, &f),
        _ => Err(Error::Capability(format!("angular integration for N = {dim} is not implemented"))),
    }
}

fn circle<F>(symmetric: bool, rel: f64, abs: f64, f: &F) -> Result<IntegralResult>
where
    F: Fn(&Point) -> Result<IntegralResult> + Sync,
{
    let span = if symmetric { PI } else { 2.0 * PI };
    let factor = if symmetric { 2.0 } else { 1.0 };
    let mut n = 8;
    let first: Vec<(Point, f64)> =
        (0..n).map(|j| (dir2(span * j as f64 / n as f64), 1.0)).collect();
    let mut vals = evaluate_all(&first, f)?;
    let mut sum = weighted_sum(&first, &vals);
    let mut estimate = sum.scale(factor * span / n as f64);
    loop {
        let fresh: Vec<(Point, f64)> =
            (0..n).map(|j| (dir2(span * (j as f64 + 0.5) / n as f64), 1.0)).collect();
        vals = evaluate_all(&fresh, f)?;
        sum = sum.add(&weighted_sum(&fresh, &vals));
        n *= 2;
        let next = sum.scale(factor * span / n as f64);
        let diff = (next.value - estimate.value).abs();
        let target = abs.max(rel * next.value.abs());
        let done = diff <= target;
        estimate = next;
        if done || n >= MAX_CIRCLE_NODES {
            estimate.error_estimate += diff;
            estimate.converged &= done;
            return Ok(estimate);
        }
    }
}

fn dir2(phi: f64) -> Point {
    Point::new(&[phi.cos(), phi.sin()])
}

fn sphere_rule(m: usize, symmetric: bool) -> Vec<(Point, f64)> {
    let (z, w) = gauss_legendre(m);
    let (lo, hi) = if symmetric { (0.0, 1.0) } else { (-1.0, 1.0) };
    let factor = if symmetric { 2.0 } else { 1.0 };
    let nphi = 2 * m;
    let mut out = Vec::with_capacity(m * nphi);
    for (zi, wi) in z.iter().zip(&w) {
        let zz = lo + 0.5 * (hi - lo) * (zi + 1.0);
        let wz = 0.5 * (hi - lo) * wi;
        let rho = (1.0 - zz * zz).max(0.0).sqrt();
        for k in 0..nphi {
            let phi = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
            out.push((Point::new(&[rho * phi.cos(), rho * phi.sin(), zz]), factor * wz * 2.0 * PI / nphi as f64));
        }
    }
    out
}

fn sphere3<F>(symmetric: bool, rel: f64, abs: f64, f: &F) -> Result<IntegralResult>
where
    F: Fn(&Point) -> Result<IntegralResult> + Sync,
{
    let mut m = 6;
    let rule = sphere_rule(m, symmetric);
    let mut estimate = weighted_sum(&rule, &evaluate_all(&rule, f)?);
    loop {
        m *= 2;
        let rule = sphere_rule(m, symmetric);
        let next = weighted_sum(&rule, &evaluate_all(&rule, f)?);
        let diff = (next.value - estimate.value).abs();
        let done = diff <= abs.max(rel * next.value.abs());
        let evals = estimate.evaluations;
        estimate = next;
        estimate.evaluations += evals;
        if done || m >= MAX_SPHERE_LEVEL {
            estimate.error_estimate += diff;
            estimate.converged &= done;
            return Ok(estimate);
        }
    }
}

/// ∫ f(ω, θ) dω over the cone of directions within angle α of the unit
/// `axis`, θ being the angle to the axis. The substitution θ = α sin(πv/2)
/// removes square-root behaviour at the rim.
pub fn cone_integrate<F>(axis: &Point, alpha: f64, tol: &Tol, f: F) -> Result<IntegralResult>
where
    F: Fn(&Point, f64) -> Result<f64> + Sync,
{
    let n = axis.dim();
    let mut evaluations = 0usize;
    let counter = std::sync::atomic::AtomicUsize::new(0);
    let r = match n {
        2 => {
            let perp = Point::new(&[-axis[1], axis[0]]);
            integrate(
                |v| {
                    let th = alpha * (0.5 * PI * v).sin();
                    let jac = alpha * 0.5 * PI * (0.5 * PI * v).cos();
                    let w = *axis * th.cos() + perp * th.sin();
                    counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    Ok(f(&w, th.abs())? * jac)
                },
                -1.0,
                1.0,
                tol,
            )?
        }
        3 => {
            let helper = if axis[0].abs() < 0.9 { Point::axis(3, 0, 1.0) } else { Point::axis(3, 1, 1.0) };
            let e1 = (helper - *axis * helper.dot(axis)).normalized().expect("helper not parallel");
            let e2 = Point::new(&[
                axis[1] * e1[2] - axis[2] * e1[1],
                axis[2] * e1[0] - axis[0] * e1[2],
                axis[0] * e1[1] - axis[1] * e1[0],
            ]);
            integrate(
                |v| {
                    let th = alpha * (0.5 * PI * v).sin();
                    let jac = alpha * 0.5 * PI * (0.5 * PI * v).cos() * th.sin();
                    if jac == 0.0 {
                        return Ok(0.0);
                    }
                    let ring = |k: usize, nphi: usize| -> Result<f64> {
                        let phi = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
                        let w = *axis * th.cos() + (e1 * phi.cos() + e2 * phi.sin()) * th.sin();
                        f(&w, th)
                    };
                    let mut nphi = 8;
                    let vals: Result<Vec<f64>> = (0..nphi).into_par_iter().map(|k| ring(k, nphi)).collect();
                    let mut est = vals?.iter().sum::<f64>() * 2.0 * PI / nphi as f64;
                    loop {
                        // refine by a shifted rule of twice the density
                        nphi *= 2;
                        let vals: Result<Vec<f64>> = (0..nphi).into_par_iter().map(|k| ring(k, nphi)).collect();
                        let next = vals?.iter().sum::<f64>() * 2.0 * PI / nphi as f64;
                        counter.fetch_add(nphi, std::sync::atomic::Ordering::Relaxed);
                        let done = (next - est).abs() <= tol.abs.max(tol.rel * next.abs());
                        est = next;
                        if done || nphi >= 512 {
                            break;
                        }
                    }
                    Ok(est * jac)
                },
                0.0,
                1.0,
                tol,
            )?
        }
        _ => return Err(Error::Capability(format!("cone integration for N = {n} is not implemented"))),
    };
    evaluations += counter.load(std::sync::atomic::Ordering::Relaxed);
    Ok(IntegralResult { evaluations, ..r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: f64) -> Result<IntegralResult> {
        Ok(IntegralResult::exact(v))
    }

    #[test]
    fn sphere_areas() {
        let c = sphere_integrate(2, false, 1e-12, 1e-14, |_| unit(1.0)).unwrap();
        assert!((c.value - 2.0 * PI).abs() < 1e-13);
        let s = sphere_integrate(3, true, 1e-12, 1e-14, |_| unit(1.0)).unwrap();
        assert!((s.value - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn second_moments() {
        let c = sphere_integrate(2, true, 1e-12, 1e-14, |w| unit(w[0] * w[0])).unwrap();
        assert!((c.value - PI).abs() < 1e-12);
        let s = sphere_integrate(3, false, 1e-12, 1e-14, |w| unit(w[2].powi(4))).unwrap();
        assert!((s.value - 4.0 * PI / 5.0).abs() < 1e-12);
    }

    #[test]
    fn cone_solid_angles() {
        let tol = Tol::new(1e-12, 1e-14);
        let a = 0.7;
        let c = cone_integrate(&Point::new(&[0.6, 0.8]), a, &tol, |_, _| Ok(1.0)).unwrap();
        assert!((c.value - 2.0 * a).abs() < 1e-12);
        let s = cone_integrate(&Point::new(&[0.0, 0.0, 1.0]), a, &tol, |_, _| Ok(1.0)).unwrap();
        assert!((s.value - 2.0 * PI * (1.0 - a.cos())).abs() < 1e-11);
        // first moment of the axis component
        let m = cone_integrate(&Point::new(&[0.0, 1.0, 0.0]), a, &tol, |w, _| Ok(w[1])).unwrap();
        assert!((m.value - PI * a.sin().powi(2)).abs() < 1e-11);
    }
}
