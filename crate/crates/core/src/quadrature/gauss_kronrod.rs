//! Adaptive Gauss–Kronrod (10/21-point) integration on finite, graded and
//! semi-infinite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{IntegralResult, Tol};
use crate::error::{Error, Result};

// Kronrod abscissae; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_634_245,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn checked<F>(f: &mut F, x: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let v = f(x)?;
    if !v.is_finite() {
        return Err(Error::Evaluation { point: vec![x], value: v });
    }
    Ok(v)
}

fn rule<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment { a, b, value, error })
}

/// Adaptive integral of `f` over `[a, b]` (global bisection of the worst segment).
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: &Tol) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(IntegralResult::exact(0.0));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let pieces = tol.initial_segments.max(1);
    let mut heap = BinaryHeap::with_capacity(tol.max_subdiv + pieces);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut frozen_error = 0.0;
    let mut evaluations = 0usize;
    let width = (hi - lo) / pieces as f64;
    for k in 0..pieces {
        let sa = lo + k as f64 * width;
        let sb = if k + 1 == pieces { hi } else { sa + width };
        let seg = rule(&mut f, sa, sb)?;
        evaluations += 21;
        value += seg.value;
        error += seg.error;
        heap.push(seg);
    }
    let mut converged = false;
    loop {
        let target = tol.abs.max(tol.rel * value.abs());
        if error + frozen_error <= target {
            converged = true;
            break;
        }
        if heap.len() >= tol.max_subdiv {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 * (worst.a.abs() + worst.b.abs()) {
            // cannot be resolved further in floating point
            frozen_error += worst.error;
            error -= worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = rule(&mut f, worst.a, mid)?;
        let right = rule(&mut f, mid, worst.b)?;
        evaluations += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // recompute sums to shed accumulated cancellation
    let (mut v, mut e) = (0.0, frozen_error);
    for seg in heap.iter() {
        v += seg.value;
        e += seg.error;
    }
    if !converged {
        let target = tol.abs.max(tol.rel * v.abs());
        converged = e <= target;
    }
    Ok(IntegralResult { value: sign * v, error_estimate: e, evaluations, converged })
}

/// Adaptive integral over `[a, ∞)` through x = a + (1 - t)/t.
pub fn integrate_to_infinity<F>(mut f: F, a: f64, tol: &Tol) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate(
        |t| {
            let x = a + (1.0 - t) / t;
            if !x.is_finite() {
                return Ok(0.0);
            }
            Ok(f(x)? / (t * t))
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integral over `[a, b]` after power substitutions clustering nodes at the
/// endpoints: `x = a + (b-a) u^p` near `a` and the mirror image near `b`.
/// A power of 1 leaves that end untouched. The closure receives both the
/// abscissa and its distance to the nearer graded endpoint, so integrands
/// singular like `dist^(-alpha)` can be evaluated without cancellation.
pub fn integrate_graded<F>(mut f: F, a: f64, b: f64, left: f64, right: f64, tol: &Tol) -> Result<IntegralResult>
where
    F: FnMut(f64, EndpointDistance) -> Result<f64>,
{
    if a == b {
        return Ok(IntegralResult::exact(0.0));
    }
    match (left != 1.0, right != 1.0) {
        (false, false) => integrate(|x| f(x, EndpointDistance::None), a, b, tol),
        (true, false) => graded_left(&mut f, a, b, left, tol),
        (false, true) => graded_right(&mut f, a, b, right, tol),
        (true, true) => {
            let mid = a + 0.5 * (b - a);
            let half_tol = tol.halved();
            let l = graded_left(&mut f, a, mid, left, &half_tol)?;
            let r = graded_right(&mut f, mid, b, right, &half_tol)?;
            Ok(l.add(&r))
        }
    }
}

fn graded_left<F>(f: &mut F, a: f64, b: f64, p: f64, tol: &Tol) -> Result<IntegralResult>
where
    F: FnMut(f64, EndpointDistance) -> Result<f64>,
{
    let len = b - a;
    integrate(
        |u| {
            let d = len * u.powf(p);
            let jac = len * p * u.powf(p - 1.0);
            if jac == 0.0 {
                return Ok(0.0);
            }
            Ok(f(a + d, EndpointDistance::Left(d))? * jac)
        },
        0.0,
        1.0,
        tol,
    )
}

fn graded_right<F>(f: &mut F, a: f64, b: f64, p: f64, tol: &Tol) -> Result<IntegralResult>
where
    F: FnMut(f64, EndpointDistance) -> Result<f64>,
{
    let len = b - a;
    integrate(
        |u| {
            let d = len * (1.0 - u).powf(p);
            let jac = len * p * (1.0 - u).powf(p - 1.0);
            if jac == 0.0 {
                return Ok(0.0);
            }
            Ok(f(b - d, EndpointDistance::Right(d))? * jac)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Which graded endpoint a node is measured from, with the exact distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndpointDistance {
    None,
    Left(f64),
    Right(f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tol(rel: f64) -> Tol {
        Tol { rel, abs: 1e-14, max_subdiv: 2000, initial_segments: 1 }
    }

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| Ok(x.powi(5) - 3.0 * x * x + 1.0), -1.0, 2.0, &tol(1e-12)).unwrap();
        let exact = (64.0 / 6.0 - 1.0 / 6.0) - (8.0 + 1.0) + 3.0;
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity_by_bisection() {
        let r = integrate(|x| Ok(1.0 / x.sqrt()), 0.0, 1.0, &tol(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn graded_strong_singularity() {
        // ∫_0^1 x^{-0.99} dx = 100
        let r = integrate_graded(
            |_, d| match d {
                EndpointDistance::Left(t) => Ok(t.powf(-0.99)),
                _ => unreachable!(),
            },
            0.0,
            1.0,
            100.0,
            1.0,
            &tol(1e-10),
        )
        .unwrap();
        assert!((r.value - 100.0).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn semi_infinite_interval() {
        let r = integrate_to_infinity(|x| Ok(1.0 / (1.0 + x * x)), 0.0, &tol(1e-10)).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x| Ok(x.exp()), 1.0, 0.0, &tol(1e-12)).unwrap();
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x| Ok(if x > 0.5 { f64::NAN } else { 1.0 }), 0.0, 1.0, &tol(1e-8));
        assert!(matches!(err, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn budget_exhaustion_is_flagged_not_fatal() {
        let t = Tol { rel: 1e-15, abs: 0.0, max_subdiv: 3, initial_segments: 1 };
        let r = integrate(|x| Ok((1.0 / (x + 1e-9)).sin()), 0.0, 1.0, &t).unwrap();
        assert!(!r.converged);
        assert!(r.error_estimate.is_finite());
    }
}
