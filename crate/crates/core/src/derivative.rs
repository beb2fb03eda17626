//! The s-derivative v_s = ∂_s u_s of solutions u_s = 𝒢_s f: the source
//! ℒ_s f, the solve v_s = 𝒢_s ℒ_s f, difference quotients in s, and the
//! first-order expansion u_s = u_1 - (1-s) v_1 + o(1-s) at s = 1, where
//! v_1 = lim_{t→0+} (u_1 - u_{1-t})/t.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closedform::TorsionFamily;
use crate::error::{Error, Result};
use crate::field::{CompactField, FnField, ScalarField, Support};
use crate::geometry::Domain;
use crate::kernels::KernelFamily;
use crate::operators::log_laplacian_compact;
use crate::point::Point;
use crate::quadrature::QuadConfig;
use crate::radial::RadialTable;

/// Sign of the complementary Poisson term in ℒ_s f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Convention {
    /// ℒ_s f = -L_Δ E_Ω f - ∫_Ω P_s^c(·, z) f(z) dz.
    #[default]
    Theorem,
    /// ℒ_s f = -L_Δ E_Ω f + ∫_Ω P_s^c(·, z) f(z) dz.
    Proposition,
}

/// Values on an interior point cloud together with the boundary distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    points: Vec<Vec<f64>>,
    deltas: Vec<f64>,
    values: Vec<f64>,
    measure: f64,
}

impl GridField {
    pub fn new(domain: &Domain, points: &[Point], values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::Contract(format!("{} points but {} values", points.len(), values.len())));
        }
        let deltas: Vec<f64> = points.iter().map(|p| domain.delta(p)).collect();
        if let Some(i) = deltas.iter().position(|&d| d <= 0.0) {
            return Err(Error::Domain(format!("grid point {:?} is not interior", points[i].as_slice())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation { point: points[i].as_slice().to_vec(), value: values[i] });
        }
        Ok(Self { points: points.iter().map(|p| p.as_slice().to_vec()).collect(), deltas, values, measure: domain.volume() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.points.iter().map(|p| Point::new(p)).collect()
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm, treating the cloud as an equal-weight sample of Ω.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_norm(0.0, 2.0)
    }

    /// (|Ω|/n Σ |v δ^a|^p)^{1/p}.
    pub fn weighted_norm(&self, a: f64, p: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.values.iter().zip(&self.deltas).map(|(v, d)| (v * d.powf(a)).abs().powf(p)).sum();
        (self.measure * sum / self.len() as f64).powf(1.0 / p)
    }

    /// Pointwise difference; both fields must live on the same cloud.
    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        if self.points != other.points {
            return Err(Error::Contract("grid fields live on different point clouds".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridField { values, ..self.clone() })
    }

    pub fn scale(&self, c: f64) -> GridField {
        GridField { values: self.values.iter().map(|v| c * v).collect(), ..self.clone() }
    }
}

/// `count` points on the segment from the centre towards the first axis,
/// at radii k R/count for k = 0..count.
pub fn radial_grid(domain: &Domain, count: usize) -> Vec<Point> {
    let c = domain.center();
    let n = domain.dim();
    let reach = match domain {
        Domain::Ball { radius, .. } => *radius,
        Domain::Ellipsoid(_) => domain.ray_interval(&c, &Point::axis(n, 0, 1.0)).map(|(_, t)| t).unwrap_or(0.0),
    };
    (0..count).map(|k| c + Point::axis(n, 0, reach * k as f64 / count as f64)).collect()
}

/// ℒ_s f(x) under the Theorem convention.
pub fn ell_s(f: &CompactField, s: f64, x: &Point, cfg: &QuadConfig) -> Result<f64> {
    ell_s_with(f, s, x, Convention::Theorem, cfg)
}

pub fn ell_s_with(f: &CompactField, s: f64, x: &Point, convention: Convention, cfg: &QuadConfig) -> Result<f64> {
    let domain = f.domain();
    if !domain.contains(x) {
        return Err(Error::Domain(format!("ℒ_s f is evaluated at interior points, got {:?}", x.as_slice())));
    }
    let log = log_laplacian_compact(f, x, cfg)?.value;
    let comp = KernelFamily::new(domain, s)?.comp_poisson_apply(f, x, cfg)?.value;
    Ok(match convention {
        Convention::Theorem => -log - comp,
        Convention::Proposition => -log + comp,
    })
}

/// ℒ_s f as a field on Ω: tabulated radially for radial data on a ball,
/// evaluated on demand otherwise.
pub fn ell_s_field(f: &CompactField, s: f64, convention: Convention, cfg: &QuadConfig) -> Result<Box<dyn ScalarField>> {
    let domain = f.domain().clone();
    let n = domain.dim();
    let c = domain.center();
    if f.radial_profile().is_some() && domain.as_ball().is_some() {
        let table = RadialTable::build(&domain, |r| ell_s_with(f, s, &(c + Point::axis(n, 0, r)), convention, cfg))?
            .with_interface_exponent(s - 1.0);
        return Ok(Box::new(table));
    }
    let g = f.clone();
    let cfg = cfg.clone();
    Ok(Box::new(
        FnField::new(n, move |x| {
            if g.domain().contains(x) {
                ell_s_with(&g, s, x, convention, &cfg).unwrap_or(f64::NAN)
            } else {
                0.0
            }
        })
        .with_support(Support::Compact(domain.clone()))
        .with_interface(domain, s - 1.0),
    ))
}

/// v_s = 𝒢_s(ℒ_s f) on the grid.
pub fn solve_vs(f: &CompactField, s: f64, grid: &[Point], cfg: &QuadConfig) -> Result<GridField> {
    solve_vs_with(f, s, grid, Convention::Theorem, cfg)
}

pub fn solve_vs_with(
    f: &CompactField,
    s: f64,
    grid: &[Point],
    convention: Convention,
    cfg: &QuadConfig,
) -> Result<GridField> {
    let domain = f.domain();
    let kern = KernelFamily::new(domain, s)?;
    let source = ell_s_field(f, s, convention, &cfg.inner())?;
    let values: Result<Vec<f64>> = grid.par_iter().map(|x| Ok(kern.green_apply(source.as_ref(), x, cfg)?.value)).collect();
    GridField::new(domain, grid, values?)
}

/// 𝒢_s f on the grid.
pub fn solve_us(f: &CompactField, s: f64, grid: &[Point], cfg: &QuadConfig) -> Result<GridField> {
    let domain = f.domain();
    let kern = KernelFamily::new(domain, s)?;
    let values: Result<Vec<f64>> = grid.par_iter().map(|x| Ok(kern.green_apply(f, x, cfg)?.value)).collect();
    GridField::new(domain, grid, values?)
}

/// (𝒢_{s+h} f - 𝒢_{s-h} f)/(2h), or (𝒢_s f - 𝒢_{s-h} f)/h when s + h > 1.
pub fn finite_diff_ds(f: &CompactField, s: f64, h: f64, grid: &[Point], cfg: &QuadConfig) -> Result<GridField> {
    if !(h > 0.0 && s - h > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("difference step {h} at order {s} leaves (0, 1]")));
    }
    let tight = cfg.with_tolerances(cfg.rel_tol.min(1e-3 * h), cfg.abs_tol.min(1e-3 * h * cfg.abs_tol.max(1e-12)));
    let below = solve_us(f, s - h, grid, &tight)?;
    if s + h <= 1.0 {
        let above = solve_us(f, s + h, grid, &tight)?;
        Ok(above.sub(&below)?.scale(0.5 / h))
    } else {
        let at = solve_us(f, s, grid, &tight)?;
        Ok(at.sub(&below)?.scale(1.0 / h))
    }
}

/// Sup-norm residual of the expansion u_s = u_1 - (1-s) v_1 + o(1-s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub s: f64,
    pub residual: f64,
    pub ratio: f64,
}

/// ‖𝒢_s f - 𝒢_1 f + (1-s) v_1‖_sup over the grid of `v1`; `u1` is 𝒢_1 f on the same grid.
pub fn expansion_residual(
    f: &CompactField,
    s: f64,
    u1: &GridField,
    v1: &GridField,
    cfg: &QuadConfig,
) -> Result<ExpansionReport> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("expansion residual needs s in (0, 1), got {s}")));
    }
    let grid = v1.points();
    let us = solve_us(f, s, &grid, cfg)?;
    let residual = us.sub(u1)?.sub(&v1.scale(s - 1.0))?.sup_norm();
    Ok(ExpansionReport { s, residual, ratio: residual / (1.0 - s) })
}

/// The same residual from the closed-form torsion family (f ≡ 1).
pub fn expansion_residual_exact(family: &TorsionFamily, s: f64, grid: &[Point]) -> Result<ExpansionReport> {
    let mut residual = 0.0f64;
    for x in grid {
        let r = family.value(s, x)? - family.value(1.0, x)? + (1.0 - s) * family.s_derivative(1.0, x)?;
        residual = residual.max(r.abs());
    }
    Ok(ExpansionReport { s, residual, ratio: residual / (1.0 - s) })
}

/// One row of the two-sided difference-quotient table at s = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedRow {
    pub point: Vec<f64>,
    pub h: f64,
    /// (u_1 - u_{1-h})/h.
    pub below: f64,
    /// (u_{1+h} - u_1)/h.
    pub above: f64,
    pub gap: f64,
    pub v1: f64,
}

/// One-sided difference quotients of the torsion family across s = 1.
pub fn two_sided_check(family: &TorsionFamily, points: &[Point], h_list: &[f64]) -> Result<Vec<TwoSidedRow>> {
    let mut rows = Vec::with_capacity(points.len() * h_list.len());
    for x in points {
        let u1 = family.value(1.0, x)?;
        let v1 = family.s_derivative(1.0, x)?;
        for &h in h_list {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::Domain(format!("step {h} must lie in (0, 1)")));
            }
            let below = (u1 - family.value(1.0 - h, x)?) / h;
            let above = (family.value(1.0 + h, x)? - u1) / h;
            rows.push(TwoSidedRow { point: x.as_slice().to_vec(), h, below, above, gap: (below - above).abs(), v1 });
        }
    }
    Ok(rows)
}

/// Least-squares slope of ln(gap) against ln(h) for one point's rows.
pub fn decay_order(rows: &[TwoSidedRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.gap > 0.0).map(|r| (r.h.ln(), r.gap.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    (den > 0.0).then(|| num / den)
}
