//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any fails. Runs as a plain binary so every line is always shown.

use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::Instant;

use fraclab::bounds::{green_norm_bound, p_s_lower, p_s_numeric};
use fraclab::derivative::{
    decay_order, expansion_residual, expansion_residual_exact, radial_grid, solve_us, solve_vs, solve_vs_with,
    two_sided_check, Convention,
};
use fraclab::field::{CubicBump, SmoothBump};
use fraclab::kernels::green_apply;
use fraclab::operators::{boundary_flux_pairing, exterior_normal_pairing, interchange_residual, log_laplacian};
use fraclab::quadrature::integrate_interior_fn;
use fraclab::specfun::ball_torsion_constant;
use fraclab::{CompactField, Domain, FnField, KernelFamily, Point, QuadConfig, ScalarField, TorsionFamily};

type Check = Result<(bool, String), String>;

fn e(err: fraclab::Error) -> String {
    err.to_string()
}

fn disc() -> Domain {
    Domain::unit_ball(2)
}

fn cfg(rel: f64) -> QuadConfig {
    QuadConfig::default().with_tolerances(rel, 1e-3 * rel)
}

/// 𝒢_s 1 against d_{N,s}(1 - |x|²)^s, relative to d_{N,s}.
fn torsion_gate() -> Check {
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        let d = Domain::unit_ball(n);
        let one = CompactField::constant(d.clone(), 1.0);
        let mut pts = radial_grid(&d, 10);
        pts.push(Point::new(&[0.3, -0.5, 0.2][..n]));
        pts.push(Point::new(&[-0.1, 0.6, 0.7][..n]));
        for s in [0.25, 0.5, 0.75, 1.0] {
            let (dc, _) = ball_torsion_constant(n, s).map_err(e)?;
            for x in &pts {
                let g = green_apply(&d, &one, s, x, &cfg(1e-7)).map_err(e)?.value;
                worst = worst.max((g - dc * (1.0 - x.norm_sq()).powf(s)).abs() / dc);
            }
        }
    }
    Ok((worst < 1e-3, format!("worst relative error {worst:.2e} (limit 1e-3)")))
}

fn worst_vs_error(convention: Convention, s: f64) -> Result<f64, String> {
    let d = disc();
    let f = CompactField::constant(d.clone(), 1.0);
    let grid = radial_grid(&d, 20);
    let v = solve_vs_with(&f, s, &grid, convention, &cfg(1e-6)).map_err(e)?;
    let fam = TorsionFamily::new(d);
    let mut worst = 0.0f64;
    for (x, got) in grid.iter().zip(v.values()) {
        let want = fam.s_derivative(s, x).map_err(e)?;
        worst = worst.max((got - want).abs() / want.abs());
    }
    Ok(worst)
}

fn derivative_characterization() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.5, 0.75, 1.0] {
        let good = worst_vs_error(Convention::Theorem, s)?;
        let flipped = worst_vs_error(Convention::Proposition, s)?;
        // the flipped sign must be rejected by the same 5% test
        ok &= good < 0.05 && flipped >= 0.05;
        parts.push(format!("s={s}: {good:.1e} (flipped sign {flipped:.2})"));
    }
    Ok((ok, parts.join("; ")))
}

fn v1_anchor() -> Check {
    let d = disc();
    let f = CompactField::constant(d, 1.0);
    let v = solve_vs(&f, 1.0, &[Point::zeros(2)], &cfg(1e-8)).map_err(e)?.values()[0];
    let want = -0.5579657;
    let rel = (v - want).abs() / want.abs();
    Ok((rel < 0.05, format!("v_1(0) = {v:.10} (relative deviation {rel:.1e})")))
}

fn expansion() -> Check {
    let d = disc();
    let f = CompactField::constant(d.clone(), 1.0);
    let grid = radial_grid(&d, 20);
    let c = cfg(1e-8);
    let u1 = solve_us(&f, 1.0, &grid, &c).map_err(e)?;
    let v1 = solve_vs(&f, 1.0, &grid, &c).map_err(e)?;
    let fam = TorsionFamily::new(d);
    let mut ratios = Vec::new();
    let mut ok = true;
    for s in [0.9, 0.95, 0.99] {
        let num = expansion_residual(&f, s, &u1, &v1, &c).map_err(e)?;
        let exact = expansion_residual_exact(&fam, s, &grid).map_err(e)?;
        ok &= (num.residual - exact.residual).abs() <= 0.1 * exact.residual;
        ratios.push(num.ratio);
    }
    ok &= ratios.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, format!("residual/(1-s) = {:.4}, {:.4}, {:.5}", ratios[0], ratios[1], ratios[2])))
}

fn two_sided() -> Check {
    let fam = TorsionFamily::unit_ball(2);
    let rows = two_sided_check(&fam, &[Point::zeros(2)], &[1e-2, 1e-3, 1e-4, 1e-5]).map_err(e)?;
    let at = rows.iter().find(|r| r.h == 1e-3).expect("h = 1e-3 row");
    let rel = at.gap / at.v1.abs();
    let order = decay_order(&rows).unwrap_or(f64::NAN);
    let ok = rel < 1e-2 && (order - 1.0).abs() < 0.1;
    Ok((ok, format!("gap/|v_1(0)| = {rel:.2e} at h=1e-3, decay order {order:.3}")))
}

fn boundary_band() -> Check {
    // -v_1/(δ(1+|ln δ|)) from the closed form (30-digit evaluation), frozen
    const ORACLE: [(f64, f64); 4] = [
        (1e-3, 0.533_827_076_793_405_4),
        (1e-2, 0.545_759_886_200_239_6),
        (1e-1, 0.559_859_083_430_771_6),
        (0.3, 0.560_221_623_889_037_1),
    ];
    let (lo, hi) = (0.53, 0.565);
    let d = disc();
    let f = CompactField::constant(d, 1.0);
    let grid: Vec<Point> = ORACLE.iter().map(|(delta, _)| Point::new(&[1.0 - delta, 0.0])).collect();
    let v = solve_vs(&f, 1.0, &grid, &cfg(1e-8)).map_err(e)?;
    let mut ok = true;
    let mut seen = Vec::new();
    for ((delta, want), got) in ORACLE.iter().zip(v.values()) {
        let ratio = -got / (delta * (1.0 + delta.ln().abs()));
        ok &= ratio > lo && ratio < hi && (ratio - want).abs() < 1e-3 * want;
        seen.push(format!("{ratio:.4}"));
    }
    Ok((ok, format!("ratios [{}] in band [{lo}, {hi}]", seen.join(", "))))
}

fn interchange() -> Check {
    let d = disc();
    let pts = [[0.0, 0.0], [0.3, 0.1], [-0.2, 0.4], [0.5, -0.3], [0.1, -0.6]];
    let mut ok = true;
    let mut worst = [0.0f64; 2];
    let mut dropped_min = f64::INFINITY;
    for (i, s) in [1.0, 0.5].into_iter().enumerate() {
        let u: Arc<dyn ScalarField> = Arc::new(TorsionFamily::new(d.clone()).field(s).map_err(e)?);
        let c = if s == 1.0 { cfg(1e-4) } else { cfg(1e-2) };
        for x in pts {
            let r = interchange_residual(u.clone(), &d, &Point::new(&x), s, &c).map_err(e)?;
            let rel = r.residual.abs() / r.lhs.abs();
            worst[i] = worst[i].max(rel);
            ok &= rel < 5e-2;
            if s == 1.0 {
                // without the complementary Poisson term the identity must fail
                let dropped = (r.lhs - r.rhs_log).abs() / r.lhs.abs();
                dropped_min = dropped_min.min(dropped);
                ok &= dropped >= 5e-2;
            }
        }
    }
    Ok((
        ok,
        format!(
            "worst relative residual {:.1e} (s=1), {:.1e} (s=0.5); without the extra term {:.2}",
            worst[0], worst[1], dropped_min
        ),
    ))
}

fn kernel_normalizations() -> Check {
    let d = disc();
    let one = FnField::constant(2, 1.0);
    let c = cfg(1e-9);
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, limit) in [(1.0, 1e-6), (0.3, 1e-4), (0.7, 1e-4)] {
        let k = KernelFamily::new(&d, s).map_err(e)?;
        let mut worst = 0.0f64;
        for z in [[0.0, 0.0], [0.5, 0.2], [-0.1, 0.9]] {
            let v = k.poisson_extend(&one, &Point::new(&z), &c).map_err(e)?.value;
            worst = worst.max((v - 1.0).abs());
        }
        ok &= worst < limit;
        parts.push(format!("s={s}: {worst:.1e}"));
    }
    Ok((ok, parts.join(", ")))
}

fn comp_kernel_convergence() -> Check {
    let d = disc();
    let c = cfg(1e-6);
    let k1 = KernelFamily::new(&d, 1.0).map_err(e)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [[0.2, 0.1], [0.6, -0.3]] {
        let x = Point::new(&x);
        let l2 = |g: &(dyn Fn(&Point) -> f64 + Sync)| -> Result<f64, String> {
            Ok(integrate_interior_fn(&d, |z, _| g(z).powi(2), 0.0, &c).map_err(e)?.value.sqrt())
        };
        let p1 = |z: &Point| k1.comp_poisson_kernel(&x, z, &c.inner()).unwrap_or(f64::NAN);
        let base = l2(&p1)?;
        let mut norms = Vec::new();
        for s in [0.8, 0.9, 0.95, 0.99] {
            let ks = KernelFamily::new(&d, s).map_err(e)?;
            let diff = |z: &Point| ks.comp_poisson_kernel(&x, z, &c.inner()).unwrap_or(f64::NAN) - p1(z);
            norms.push(l2(&diff)?);
        }
        ok &= norms.iter().all(|v| v.is_finite());
        ok &= norms.windows(2).all(|w| w[1] < w[0]);
        let last = norms[3] / base;
        ok &= last < 0.05;
        parts.push(format!("x={:?}: final {last:.1e} of the s=1 norm", x.as_slice()));
    }
    Ok((ok, parts.join("; ")))
}

fn comp_kernel_boundary_rate() -> Check {
    let d = disc();
    let one = CompactField::constant(d.clone(), 1.0);
    let c = cfg(1e-6);
    let mut products = Vec::new();
    for s in [0.6, 0.75, 0.9] {
        let k = KernelFamily::new(&d, s).map_err(e)?;
        for delta in [0.03, 0.05, 0.1, 0.2, 0.3, 0.5] {
            let x = Point::new(&[(1.0 - delta) * 0.6, (1.0 - delta) * 0.8]);
            let l1 = k.comp_poisson_apply(&one, &x, &c).map_err(e)?.value;
            products.push(delta * l1);
        }
    }
    let max = products.iter().cloned().fold(f64::MIN, f64::max);
    let min = products.iter().cloned().fold(f64::MAX, f64::min);
    Ok((min > 0.0 && max / min < 10.0, format!("δ·‖P_s^c(x,·)‖_L1 in [{min:.3}, {max:.3}], spread {:.2}", max / min)))
}

fn bounds_chain() -> Check {
    let d = disc();
    let c = QuadConfig::default();
    let mut ok = true;
    let mut at_one = None;
    for s in [0.25, 0.5, 0.75, 1.0] {
        let r = green_norm_bound(&d, s, &c).map_err(e)?;
        ok &= r.chain_holds();
        if s == 1.0 {
            at_one = Some(r);
        }
    }
    let r = at_one.expect("s = 1 row");
    ok &= (r.norm_numeric - 0.25).abs() < 1e-6;
    ok &= (r.bound_old - 0.7930).abs() < 1e-4;
    ok &= r.p_s_lower == 0.25 && r.p_s_numeric >= r.p_s_lower;
    Ok((
        ok,
        format!("chain holds; at s=1 norm {:.6}, old bound {:.6}, p_1 {:.4} >= {}", r.norm_numeric, r.bound_old, r.p_s_numeric, r.p_s_lower),
    ))
}

fn p_lower_bound() -> Check {
    let d = disc();
    let c = QuadConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.5, 0.75, 0.9] {
        let num = p_s_numeric(&d, s, &c).map_err(e)?;
        let low = p_s_lower(&d, s).map_err(e)?;
        ok &= num >= low;
        parts.push(format!("s={s}: {num:.4} >= {low:.4}"));
    }
    Ok((ok, parts.join(", ")))
}

fn self_adjointness() -> Check {
    let c = cfg(1e-6);
    let outer = cfg(1e-5);
    let pairs = [
        (SmoothBump::new(&[0.0, 0.0], 1.0), SmoothBump::new(&[0.5, 0.2], 0.7)),
        (SmoothBump::new(&[-0.3, 0.1], 0.6), SmoothBump::new(&[0.2, -0.1], 0.9)),
    ];
    let mut worst = 0.0f64;
    for (u, v) in &pairs {
        let form = |a: &SmoothBump, b: &SmoothBump| -> Result<f64, String> {
            let support = Domain::ball(b.center.as_slice(), b.radius).map_err(e)?;
            let r = integrate_interior_fn(
                &support,
                |y, _| log_laplacian(a, y, &c).map(|l| l.value).unwrap_or(f64::NAN) * b.eval(y),
                0.0,
                &outer,
            )
            .map_err(e)?;
            Ok(r.value)
        };
        let (uv, vu) = (form(u, v)?, form(v, u)?);
        worst = worst.max((uv - vu).abs() / uv.abs().max(vu.abs()));
    }
    Ok((worst < 1e-3, format!("worst relative asymmetry {worst:.1e}")))
}

fn boundary_limit() -> Check {
    let d = disc();
    let v = TorsionFamily::new(d.clone()).field(1.0).map_err(e)?;
    let w = CubicBump::new(&[0.9, 0.3], 0.6, 1.0);
    let c = cfg(1e-4);
    let flux = boundary_flux_pairing(&v, &w, &d, &c).map_err(e)?.value;
    let mut errs = Vec::new();
    for s in [0.9, 0.95, 0.99] {
        let p = exterior_normal_pairing(&v, &w, &d, s, &c).map_err(e)?.value;
        errs.push((p - flux).abs() / flux.abs());
    }
    let ok = errs.windows(2).all(|w| w[1] < w[0]) && errs[2] < 0.05;
    Ok((ok, format!("relative errors {:.3}, {:.3}, {:.4} against the flux {flux:.6}", errs[0], errs[1], errs[2])))
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_fraclab");
    let dir = std::env::temp_dir().join(format!("fraclab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|err| err.to_string())?;
    let points = dir.join("points.csv");
    std::fs::write(&points, "1.5,0\n0,-1.2\n2,2\n").map_err(|err| err.to_string())?;
    let p = points.to_str().expect("utf-8 path");
    let runs: Vec<Vec<&str>> = vec![
        vec!["constants", "--dim", "3", "--order", "0.4"],
        vec!["bounds", "--dim", "2", "--orders", "0.5:0.25:1.0", "--domain", "ball:1"],
        vec!["torsion", "--dim", "3", "--orders", "0.25:0.25:2", "--at", "0.1,0.2,0.3"],
        vec!["eval", "--op", "ws", "--order", "0.3", "--points", p],
        vec!["kernels", "--which", "comp", "--dim", "3", "--order", "0.7", "--x", "0.1,0,0", "--z", "0,0.4,0", "--monte-carlo", "--seed", "11", "--mc-samples", "20000"],
        vec!["transition", "--grid", "6"],
    ];
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let out = dir.join(format!("run{i}-{k}.out"));
            let status = Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(&out)
                .stderr(Stdio::null())
                .status()
                .map_err(|err| err.to_string())?;
            if !status.success() {
                return Ok((false, format!("`{}` exited with {status}", args.join(" "))));
            }
            bytes.push(std::fs::read(&out).map_err(|err| err.to_string())?);
        }
        let stdout: Vec<Vec<u8>> = (0..2)
            .map(|_| Command::new(bin).args(args).output().map(|o| o.stdout))
            .collect::<Result<_, _>>()
            .map_err(|err| err.to_string())?;
        if bytes[0] == bytes[1] && stdout[0] == stdout[1] && stdout[0] == bytes[0] {
            identical += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok((identical == runs.len(), format!("{identical}/{} commands byte-identical across repeats", runs.len())))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("torsion oracle gate", torsion_gate),
        ("derivative characterization and sign", derivative_characterization),
        ("v_1 at the centre", v1_anchor),
        ("first-order expansion", expansion),
        ("two-sided derivative at s = 1", two_sided),
        ("boundary behaviour of v_1", boundary_band),
        ("interchange formula", interchange),
        ("kernel normalizations", kernel_normalizations),
        ("complementary kernel convergence", comp_kernel_convergence),
        ("complementary kernel boundary rate", comp_kernel_boundary_rate),
        ("Green operator bounds chain", bounds_chain),
        ("lower bound for p_s", p_lower_bound),
        ("self-adjointness of L_Δ", self_adjointness),
        ("nonlocal normal derivative boundary limit", boundary_limit),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{:>2}. [{}] {name}: {detail} ({:.1} s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
