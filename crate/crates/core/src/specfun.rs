//! Gamma, digamma and the named constants built from them.
//!
//! Every constant is a pure function of the dimension `N` and the order `s`.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("{name}({x}): argument must be finite and > 0")));
    }
    Ok(())
}

fn lanczos_sum(x: f64) -> f64 {
    // x already shifted by -1
    let mut t = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        t += c / (x + i as f64);
    }
    t
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    check_positive("gamma", x)?;
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    if x == x.floor() && x <= 23.0 {
        // exact factorials
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return acc;
    }
    let z = x - 1.0;
    let w = z + LANCZOS_G + 0.5;
    // split the power to delay overflow
    let half = w.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-w).exp()) * lanczos_sum(z)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("ln_gamma", x)?;
    if x < 0.5 {
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let w = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * w.ln() - w + lanczos_sum(z).ln())
}

/// Digamma ψ(x) = Γ'(x)/Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // asymptotic series with Bernoulli numbers B_2 .. B_14
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - series)
}

/// Trigamma ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x)?;
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0
                - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    Ok(acc + series)
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension N = {n} must be >= 2")));
    }
    Ok(())
}

fn check_open_unit(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("order s = {s} must lie in (0, 1)")));
    }
    Ok(())
}

/// |S^{N-1}| = 2 π^{N/2} / Γ(N/2).
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma_unchecked(h)
}

/// |B_1| = π^{N/2} / Γ(N/2 + 1).
pub fn unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    PI.powf(h) / gamma_unchecked(h + 1.0)
}

/// Normalization c_{N,s} of the singular-integral fractional Laplacian.
pub fn frac_normalization(n: usize, s: f64) -> Result<f64> {
    check_dim(n)?;
    check_open_unit(s)?;
    let h = n as f64 / 2.0;
    Ok(4f64.powf(s) * gamma_unchecked(h + s) / (gamma_unchecked(2.0 - s) * PI.powf(h)) * s * (1.0 - s))
}

/// The pair (c_N, ρ_N) appearing in the logarithmic Laplacian.
pub fn log_constants(n: usize) -> Result<(f64, f64)> {
    check_dim(n)?;
    let h = n as f64 / 2.0;
    let c_n = gamma_unchecked(h) / PI.powf(h);
    let rho = 2.0 * LN_2 + digamma(h)? - EULER_GAMMA;
    Ok((c_n, rho))
}

/// κ_{N,s}, the coefficient of the fundamental solution κ |z|^{2s-N}.
pub fn riesz_constant(n: usize, s: f64) -> Result<f64> {
    check_dim(n)?;
    let h = n as f64 / 2.0;
    if !(s > 0.0 && s < h) {
        return Err(Error::Domain(format!("riesz constant needs 0 < s < N/2, got s = {s}, N = {n}")));
    }
    Ok(gamma_unchecked(h - s) / (4f64.powf(s) * PI.powf(h) * gamma_unchecked(s)))
}

/// τ_{N,s} = 2 / (Γ(s) Γ(1-s) |S^{N-1}|), the prefactor of the ball Poisson kernel.
pub fn ball_poisson_constant(n: usize, s: f64) -> Result<f64> {
    check_dim(n)?;
    check_open_unit(s)?;
    Ok(2.0 / (gamma_unchecked(s) * gamma_unchecked(1.0 - s) * sphere_area(n)))
}

/// Prefactor of the ball Green function
/// G_s(x,y) = k_{N,s} |x-y|^{2s-N} ∫_0^{r0} t^{s-1} (1+t)^{-N/2} dt.
pub fn ball_green_constant(n: usize, s: f64) -> Result<f64> {
    check_dim(n)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("ball Green constant needs s in (0, 1], got {s}")));
    }
    let h = n as f64 / 2.0;
    let gs = gamma_unchecked(s);
    Ok(gamma_unchecked(h) / (4f64.powf(s) * PI.powf(h) * gs * gs))
}

/// Torsion constant d_{N,s} of the unit ball together with its s-derivative:
/// (-Δ)^s [d_{N,s} (1-|x|^2)_+^s] = 1 in B_1.
pub fn ball_torsion_constant(n: usize, s: f64) -> Result<(f64, f64)> {
    check_dim(n)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("torsion constant needs s > 0, got {s}")));
    }
    let h = n as f64 / 2.0;
    let d = gamma_unchecked(h) / (4f64.powf(s) * gamma_unchecked(h + s) * gamma_unchecked(1.0 + s));
    let log_deriv = -(4f64.ln()) - digamma(h + s)? - digamma(1.0 + s)?;
    Ok((d, d * log_deriv))
}

/// B(a, b) = Γ(a)Γ(b)/Γ(a+b).
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}

// Modified Lentz evaluation of the continued fraction for I_z(a, b).
fn beta_continued_fraction(z: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * z / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * z / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Unregularized incomplete Beta B(z; a, b) = ∫_0^z t^{a-1}(1-t)^{b-1} dt.
/// `zc` must equal 1 - z; passing it separately keeps precision near z = 1.
pub fn incomplete_beta(z: f64, zc: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("incomplete beta needs a, b > 0 (got {a}, {b})")));
    }
    if !(0.0..=1.0).contains(&z) || !(0.0..=1.0).contains(&zc) {
        return Err(Error::Domain(format!("incomplete beta argument {z} outside [0, 1]")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if zc == 0.0 {
        return beta(a, b);
    }
    let front = (a * z.ln() + b * zc.ln()).exp();
    if z < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_continued_fraction(z, a, b) / a)
    } else {
        Ok(beta(a, b)? - front * beta_continued_fraction(zc, b, a) / b)
    }
}

/// Second s-derivative of d_{N,s}.
pub fn ball_torsion_constant_second_derivative(n: usize, s: f64) -> Result<f64> {
    let (d, _) = ball_torsion_constant(n, s)?;
    let h = n as f64 / 2.0;
    let l = -(4f64.ln()) - digamma(h + s)? - digamma(1.0 + s)?;
    let dl = -trigamma(h + s)? - trigamma(1.0 + s)?;
    Ok(d * (l * l + dl))
}
