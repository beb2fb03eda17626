//! Seeded Monte Carlo integration. Samples are drawn in fixed-size chunks,
//! chunk k using ChaCha stream k of the configured seed, so results do not
//! depend on how chunks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rand_distr::{Distribution, UnitBall, UnitCircle, UnitDisc, UnitSphere};
use rayon::prelude::*;

use super::{IntegralResult, QuadConfig};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::point::Point;
use crate::specfun::{sphere_area, unit_ball_volume};

const CHUNK: usize = 4096;

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn unit_ball_sample(dim: usize, rng: &mut ChaCha8Rng) -> Result<Point> {
    match dim {
        2 => Ok(Point::new(&UnitDisc.sample(rng))),
        3 => Ok(Point::new(&UnitBall.sample(rng))),
        _ => Err(Error::Capability(format!("Monte Carlo sampling for N = {dim} is not implemented"))),
    }
}

fn unit_sphere_sample(dim: usize, rng: &mut ChaCha8Rng) -> Result<Point> {
    match dim {
        2 => Ok(Point::new(&UnitCircle.sample(rng))),
        3 => Ok(Point::new(&UnitSphere.sample(rng))),
        _ => Err(Error::Capability(format!("Monte Carlo sampling for N = {dim} is not implemented"))),
    }
}

/// Mean and standard error of `weight(sample)` over `cfg.mc_samples` draws.
fn estimate<S>(cfg: &QuadConfig, sample: S) -> Result<IntegralResult>
where
    S: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let total = cfg.mc_samples;
    let chunks = total.div_ceil(CHUNK);
    let partial: Result<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(cfg.seed, k);
            let count = CHUNK.min(total - k * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let v = sample(&mut rng)?;
                s1 += v;
                s2 += v * v;
            }
            Ok((s1, s2))
        })
        .collect();
    let (mut s1, mut s2) = (0.0, 0.0);
    for (a, b) in partial? {
        s1 += a;
        s2 += b;
    }
    let n = total as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    Ok(IntegralResult { value: mean, error_estimate: (var / n).sqrt(), evaluations: total, converged: true })
}

fn checked(y: &Point, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { point: y.as_slice().to_vec(), value: v })
    }
}

/// Uniform sampling of Ω through its unit-ball preimage.
pub fn mc_interior<F>(domain: &Domain, f: &F, a: f64, cfg: &QuadConfig) -> Result<IntegralResult>
where
    F: Fn(&Point, f64) -> f64 + Sync,
{
    let n = domain.dim();
    let vol = unit_ball_volume(n) * domain.unit_jacobian();
    let r = estimate(cfg, |rng| {
        let u = unit_ball_sample(n, rng)?;
        let y = domain.from_unit(&u);
        let d = 1.0 - u.norm();
        checked(&y, d.powf(-a) * f(&y, d))
    })?;
    Ok(r.scale(vol))
}

/// Importance sampling on R^N∖Ω: the preimage radius ρ > 1 is drawn from an
/// even mixture of (ρ-1)^{-1/2} on (1, 2) and N ρ^{-N-1} on (1, ∞).
pub fn mc_exterior<F>(domain: &Domain, f: &F, a: f64, cfg: &QuadConfig) -> Result<IntegralResult>
where
    F: Fn(&Point, f64) -> f64 + Sync,
{
    let n = domain.dim();
    let nf = n as f64;
    let area = sphere_area(n);
    let jac = domain.unit_jacobian();
    let density = |rho: f64| {
        let near = if rho < 2.0 { 0.5 / (rho - 1.0).sqrt() } else { 0.0 };
        let far = nf * rho.powf(-nf - 1.0);
        0.5 * near + 0.5 * far
    };
    let r = estimate(cfg, |rng| {
        let w = unit_sphere_sample(n, rng)?;
        let u: f64 = rng.gen::<f64>();
        let v: f64 = 1.0 - rng.gen::<f64>();
        let rho = if u < 0.5 { 1.0 + v * v } else { v.powf(-1.0 / nf) };
        if rho <= 1.0 {
            return Ok(0.0);
        }
        let y = domain.from_unit(&(w * rho));
        let e = rho - 1.0;
        checked(&y, e.powf(-a) * f(&y, e) * rho.powi(n as i32 - 1) * area / density(rho))
    })?;
    Ok(r.scale(jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Method;
    use std::f64::consts::PI;

    fn mc_cfg(seed: u64) -> QuadConfig {
        QuadConfig { method: Method::MonteCarlo, seed, mc_samples: 200_000, ..QuadConfig::default() }
    }

    #[test]
    fn interior_mc_hits_second_moment() {
        let d = Domain::unit_ball(2);
        let r = mc_interior(&d, &|y: &Point, _| y.norm_sq(), 0.0, &mc_cfg(7)).unwrap();
        assert!((r.value - PI / 2.0).abs() < 4.0 * r.error_estimate);
    }

    #[test]
    fn exterior_mc_hits_reference() {
        let d = Domain::unit_ball(2);
        let r = mc_exterior(&d, &|y: &Point, _| y.norm_sq().powi(-2), 0.0, &mc_cfg(11)).unwrap();
        assert!((r.value - PI).abs() < 4.0 * r.error_estimate, "{r:?}");
    }

    #[test]
    fn same_seed_is_bit_identical_and_seeds_differ() {
        let d = Domain::unit_ball(3);
        let f = |y: &Point, _: f64| (-y.norm_sq()).exp();
        let a = mc_interior(&d, &f, 0.0, &mc_cfg(3)).unwrap();
        let b = mc_interior(&d, &f, 0.0, &mc_cfg(3)).unwrap();
        let c = mc_interior(&d, &f, 0.0, &mc_cfg(4)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn error_estimates_are_honest_over_seeds() {
        let d = Domain::unit_ball(2);
        let mut hits = 0;
        for seed in 0..40 {
            let cfg = QuadConfig { mc_samples: 20_000, ..mc_cfg(seed) };
            let r = mc_interior(&d, &|y: &Point, _| y.norm_sq(), 0.0, &cfg).unwrap();
            if (r.value - PI / 2.0).abs() <= 3.0 * r.error_estimate {
                hits += 1;
            }
        }
        assert!(hits >= 38, "{hits}");
    }
}
