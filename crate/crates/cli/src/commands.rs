use std::io::Read;
use std::sync::Arc;

use fraclab::bounds::green_norm_bound_with;
use fraclab::derivative::{
    expansion_residual, expansion_residual_exact, finite_diff_ds, radial_grid, solve_us, solve_vs, solve_vs_with,
    Convention,
};
use fraclab::operators::{
    frac_laplacian, h_omega, interchange_residual, log_laplacian, log_laplacian_compact, restriction_ws,
};
use fraclab::specfun::{
    ball_green_constant, ball_poisson_constant, ball_torsion_constant, frac_normalization, log_constants,
    riesz_constant,
};
use fraclab::{CompactField, Domain, IntegralResult, KernelFamily, Point, QuadConfig, ScalarField, TorsionFamily};

use crate::args::{Command, DerivativeArgs, EvalArgs, FieldKind, KernelArgs, Op, Sign, Which};
use crate::emit::{Cell, Document};
use crate::{Outcome, RunConfig};

type Res<T> = std::result::Result<T, String>;

fn err(e: fraclab::Error) -> String {
    e.to_string()
}

pub(crate) fn run(rc: &RunConfig, stdin: &mut dyn Read) -> Res<Outcome> {
    let config = serde_json::to_value(rc).map_err(|e| e.to_string())?;
    let mut out = Outcome { doc: Document::new(config, rc.quad.seed), flagged: false };
    let cfg = &rc.quad;
    match &rc.command {
        Command::Constants { dim, order } => constants(&mut out, *dim, *order)?,
        Command::Eval(a) => eval(&mut out, a, cfg, stdin)?,
        Command::Kernels(a) => kernels(&mut out, a, cfg)?,
        Command::Torsion { dim, domain, orders, at } => torsion(&mut out, *dim, domain, orders, at.as_deref())?,
        Command::Derivative(a) => derivative(&mut out, a, cfg)?,
        Command::Transition { dim, domain, orders, grid, table } => {
            transition(&mut out, *dim, domain, orders, *grid, table.as_deref(), cfg)?
        }
        Command::Bounds { dim, domain, orders, steps } => bounds(&mut out, *dim, domain, orders, *steps, cfg)?,
    }
    Ok(out)
}

/// `a:step:b` with both endpoints included, or a comma list.
pub(crate) fn parse_orders(text: &str) -> Res<Vec<f64>> {
    let bad = |t: &str| format!("bad order '{t}' in '{text}'");
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, step, b] => {
            let a: f64 = a.trim().parse().map_err(|_| bad(a))?;
            let step: f64 = step.trim().parse().map_err(|_| bad(step))?;
            let b: f64 = b.trim().parse().map_err(|_| bad(b))?;
            if !(step > 0.0) || b < a {
                return Err(format!("range '{text}' needs a positive step and a <= b"));
            }
            let n = ((b - a) / step).round();
            if (a + n * step - b).abs() > 1e-9 * b.abs().max(1.0) {
                return Err(format!("range '{text}' does not land on its end point"));
            }
            // rounding keeps 0.1:0.1:0.3 from producing 0.30000000000000004
            Ok((0..=n as usize).map(|k| crate::emit::round_sig(a + k as f64 * step)).collect())
        }
        [_] => text.split(',').map(|t| t.trim().parse().map_err(|_| bad(t))).collect(),
        _ => Err(format!("cannot read orders '{text}'")),
    }
}

pub(crate) fn parse_point(text: &str, dim: usize) -> Res<Point> {
    let coords: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad coordinate '{t}' in '{text}'")))
        .collect::<Res<_>>()?;
    if coords.len() != dim {
        return Err(format!("point '{text}' has {} coordinates, expected {dim}", coords.len()));
    }
    Ok(Point::new(&coords))
}

fn read_points(source: &str, dim: usize, stdin: &mut dyn Read) -> Res<Vec<Point>> {
    let mut text = String::new();
    if source == "-" {
        stdin.read_to_string(&mut text).map_err(|e| format!("cannot read stdin: {e}"))?;
    } else {
        text = std::fs::read_to_string(source).map_err(|e| format!("cannot read {source}: {e}"))?;
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("points row {}: {e}", i + 1))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let coords: Vec<f64> = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| format!("points row {}: bad number '{t}'", i + 1)))
            .collect::<Res<_>>()?;
        if coords.len() != dim {
            return Err(format!("points row {} has {} columns, expected {dim}", i + 1, coords.len()));
        }
        points.push(Point::new(&coords));
    }
    Ok(points)
}

fn domain(literal: &str, dim: usize) -> Res<Domain> {
    Domain::parse(literal, dim).map_err(err)
}

fn coord_columns(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

fn coords(x: &Point) -> Vec<Cell> {
    x.as_slice().iter().map(|c| Cell::num(*c)).collect()
}

fn constants(out: &mut Outcome, dim: usize, s: f64) -> Res<()> {
    let (c_n, rho) = log_constants(dim).map_err(err)?;
    let (d, d_prime) = ball_torsion_constant(dim, s).map_err(err)?;
    let doc = &mut out.doc;
    doc.set("dim", dim as f64);
    doc.set("s", s);
    // Constants with a restricted range of s are reported as null outside it.
    doc.set("c_Ns", frac_normalization(dim, s).map(Cell::num).unwrap_or(Cell::Null));
    doc.set("c_N", c_n);
    doc.set("rho_N", rho);
    doc.set("kappa", riesz_constant(dim, s).map(Cell::num).unwrap_or(Cell::Null));
    doc.set("tau", ball_poisson_constant(dim, s).map(Cell::num).unwrap_or(Cell::Null));
    doc.set("k_green", ball_green_constant(dim, s).map(Cell::num).unwrap_or(Cell::Null));
    doc.set("d", d);
    doc.set("d_prime", d_prime);
    Ok(())
}

impl Outcome {
    fn note(&mut self, r: &IntegralResult) {
        if !r.converged {
            self.flagged = true;
        }
    }
}

fn eval(out: &mut Outcome, a: &EvalArgs, cfg: &QuadConfig, stdin: &mut dyn Read) -> Res<()> {
    let dom = domain(&a.domain, a.dim)?;
    let points = read_points(&a.points, a.dim, stdin)?;
    let s = a.order;
    let mut cols = coord_columns("x", a.dim);
    cols.extend(["value", "error_estimate"].map(String::from));
    if a.op == Op::Interchange {
        cols.extend(["lhs", "rhs_log", "rhs_comp"].map(String::from));
    }
    out.doc.columns(&cols);
    let torsion = || TorsionFamily::new(dom.clone()).field(s).map_err(err);
    let indicator = CompactField::constant(dom.clone(), 1.0);
    for x in &points {
        let mut row = coords(x);
        let r = match (a.op, a.field) {
            (Op::Fraclap, FieldKind::Torsion) => frac_laplacian(&torsion()?, x, s, cfg),
            (Op::Fraclap, FieldKind::Indicator) => frac_laplacian(&indicator, x, s, cfg),
            (Op::Loglap, FieldKind::Torsion) => log_laplacian(&torsion()?, x, cfg),
            (Op::Loglap, FieldKind::Indicator) => log_laplacian_compact(&indicator, x, cfg),
            (Op::Homega, _) => h_omega(&dom, x, cfg).map(IntegralResult::exact),
            (Op::Ws, _) => restriction_ws(&indicator, s, x, cfg),
            (Op::Interchange, kind) => {
                let u: Arc<dyn ScalarField> = match kind {
                    FieldKind::Torsion => Arc::new(torsion()?),
                    FieldKind::Indicator => {
                        return Err("the interchange formula needs the torsion field".into());
                    }
                };
                let rep = interchange_residual(u, &dom, x, s, cfg).map_err(err)?;
                // no error estimate is attached to a difference of two nested evaluations
                row.extend([Cell::num(rep.residual), Cell::Null]);
                row.extend([rep.lhs, rep.rhs_log, rep.rhs_comp].map(Cell::num));
                out.doc.push(row);
                continue;
            }
        }
        .map_err(err)?;
        out.note(&r);
        row.extend([Cell::num(r.value), Cell::num(r.error_estimate)]);
        out.doc.push(row);
    }
    Ok(())
}

fn kernels(out: &mut Outcome, a: &KernelArgs, cfg: &QuadConfig) -> Res<()> {
    let dom = domain(&a.domain, a.dim)?;
    let fam = KernelFamily::new(&dom, a.order).map_err(err)?;
    let x = parse_point(&a.x, a.dim)?;
    let mut cols = coord_columns("x", a.dim);
    cols.extend(coord_columns("z", a.dim));
    cols.push("value".into());
    out.doc.columns(&cols);
    out.doc.set("kernel", match a.which {
        Which::Green => "green",
        Which::Poisson => "poisson",
        Which::Comp => "comp",
    });
    out.doc.set("s", a.order);
    for z in &a.z {
        let z = parse_point(z, a.dim)?;
        let v = match a.which {
            Which::Green => fam.green(&x, &z),
            Which::Poisson if a.order == 1.0 => fam.poisson_classical(&x, &z),
            Which::Poisson => fam.poisson(&x, &z),
            Which::Comp => fam.comp_poisson_kernel(&x, &z, cfg),
        }
        .map_err(err)?;
        let mut row = coords(&x);
        row.extend(coords(&z));
        row.push(Cell::num(v));
        out.doc.push(row);
    }
    Ok(())
}

fn torsion(out: &mut Outcome, dim: usize, literal: &str, orders: &str, at: Option<&str>) -> Res<()> {
    let dom = domain(literal, dim)?;
    let fam = TorsionFamily::new(dom.clone());
    let x = match at {
        Some(t) => parse_point(t, dim)?,
        None => dom.center(),
    };
    out.doc.columns(&["s", "u_s", "du_ds"]);
    for s in parse_orders(orders)? {
        let u = fam.value(s, &x).map_err(err)?;
        let du = fam.s_derivative(s, &x).map_err(err)?;
        out.doc.push(vec![s.into(), u.into(), du.into()]);
    }
    Ok(())
}

fn write_table(doc: &Document, path: &std::path::Path) -> Res<()> {
    let csv = doc.to_csv().map_err(|e| e.to_string())?;
    std::fs::write(path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn derivative(out: &mut Outcome, a: &DerivativeArgs, cfg: &QuadConfig) -> Res<()> {
    let dom = domain(&a.domain, a.dim)?;
    let f = CompactField::constant(dom.clone(), 1.0);
    let grid = radial_grid(&dom, a.grid);
    let convention = match a.convention {
        Sign::Theorem => Convention::Theorem,
        Sign::Proposition => Convention::Proposition,
    };
    let v = solve_vs_with(&f, a.order, &grid, convention, cfg).map_err(err)?;
    let fd = a.fd.map(|h| finite_diff_ds(&f, a.order, h, &grid, cfg)).transpose().map_err(err)?;
    let mut cols = coord_columns("x", a.dim);
    cols.push("v_s".into());
    if a.compare.is_some() {
        cols.extend(["closed_form", "rel_error"].map(String::from));
    }
    if fd.is_some() {
        cols.push("finite_difference".into());
    }
    out.doc.columns(&cols);
    let (mut residual, mut worst) = (0.0f64, 0.0f64);
    for (i, x) in grid.iter().enumerate() {
        let mut row = coords(x);
        let vi = v.values()[i];
        row.push(vi.into());
        if a.compare.is_some() {
            let exact = TorsionFamily::new(dom.clone()).s_derivative(a.order, x).map_err(err)?;
            let rel = (vi - exact).abs() / exact.abs();
            residual = residual.max((vi - exact).abs());
            worst = worst.max(rel);
            row.extend([exact.into(), rel.into()]);
        }
        if let Some(fd) = &fd {
            row.push(fd.values()[i].into());
        }
        out.doc.push(row);
    }
    out.doc.set("s", a.order);
    out.doc.set("sup_v_s", v.sup_norm());
    if a.compare.is_some() {
        out.doc.set("residual", residual);
        out.doc.set("max_rel_error", worst);
    }
    if let Some(path) = &a.table {
        write_table(&out.doc, path)?;
        out.doc.set("table", path.display().to_string().as_str());
    }
    Ok(())
}

fn transition(
    out: &mut Outcome,
    dim: usize,
    literal: &str,
    orders: &str,
    grid: usize,
    table: Option<&std::path::Path>,
    cfg: &QuadConfig,
) -> Res<()> {
    let dom = domain(literal, dim)?;
    let f = CompactField::constant(dom.clone(), 1.0);
    let points = radial_grid(&dom, grid);
    let u1 = solve_us(&f, 1.0, &points, cfg).map_err(err)?;
    let v1 = solve_vs(&f, 1.0, &points, cfg).map_err(err)?;
    if let Some(path) = table {
        let mut t = out.doc.clone();
        let mut cols = coord_columns("x", dim);
        cols.extend(["u_1", "v_1"].map(String::from));
        t.columns(&cols);
        for (i, x) in points.iter().enumerate() {
            let mut row = coords(x);
            row.extend([u1.values()[i].into(), v1.values()[i].into()]);
            t.push(row);
        }
        write_table(&t, path)?;
        out.doc.set("table", path.display().to_string().as_str());
    }
    let fam = TorsionFamily::new(dom.clone());
    out.doc.columns(&["s", "residual", "residual_over_1_minus_s", "residual_exact", "exact_over_1_minus_s"]);
    for s in parse_orders(orders)? {
        let num = expansion_residual(&f, s, &u1, &v1, cfg).map_err(err)?;
        let exact = expansion_residual_exact(&fam, s, &points).map_err(err)?;
        out.doc.push(vec![s.into(), num.residual.into(), num.ratio.into(), exact.residual.into(), exact.ratio.into()]);
    }
    out.doc.set("sup_v_1", v1.sup_norm());
    Ok(())
}

fn bounds(out: &mut Outcome, dim: usize, literal: &str, orders: &str, steps: usize, cfg: &QuadConfig) -> Res<()> {
    let dom = domain(literal, dim)?;
    out.doc.columns(&[
        "s",
        "norm_numeric",
        "bound_integral",
        "bound_new",
        "bound_old",
        "m_s",
        "p_s_numeric",
        "p_s_lower",
        "q_Ns",
        "chain_holds",
    ]);
    for s in parse_orders(orders)? {
        let r = green_norm_bound_with(&dom, s, steps, cfg).map_err(err)?;
        out.doc.push(vec![
            r.s.into(),
            r.norm_numeric.into(),
            r.bound_integral.into(),
            r.bound_new.into(),
            r.bound_old.into(),
            r.m_s.into(),
            r.p_s_numeric.into(),
            r.p_s_lower.into(),
            r.q_ns.into(),
            r.chain_holds().into(),
        ]);
    }
    Ok(())
}
