//! Model domains: balls and origin-centred ellipsoids {x : Ax·x < 1}.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::quadrature::rules::gauss_legendre;
use crate::specfun::{sphere_area, unit_ball_volume};

/// Symmetric positive-definite shape matrix with its spectral data cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    dim: usize,
    a: [[f64; 3]; 3],
    eigenvalues: [f64; 3],
    /// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
    eigenvectors: [[f64; 3]; 3],
}

impl Ellipsoid {
    /// Builds the ellipsoid from a row-major N×N matrix.
    pub fn new(dim: usize, a: &[f64]) -> Result<Self> {
        if !(2..=Point::MAX_DIM).contains(&dim) {
            return Err(Error::Capability(format!("ellipsoids are implemented for N = 2, 3 (got {dim})")));
        }
        if a.len() != dim * dim {
            return Err(Error::Domain(format!("expected {} matrix entries, got {}", dim * dim, a.len())));
        }
        let m = DMatrix::from_row_slice(dim, dim, a);
        let scale = m.amax().max(f64::MIN_POSITIVE);
        if (&m - m.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Domain("ellipsoid matrix must be symmetric".into()));
        }
        let eig = SymmetricEigen::new(m.clone());
        let mut ev = [0.0; 3];
        let mut vecs = [[0.0; 3]; 3];
        for k in 0..dim {
            let l = eig.eigenvalues[k];
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Domain(format!("ellipsoid matrix must be positive definite (eigenvalue {l})")));
            }
            ev[k] = l;
            for i in 0..dim {
                vecs[k][i] = eig.eigenvectors[(i, k)];
            }
        }
        let mut mat = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in 0..dim {
                mat[i][j] = m[(i, j)];
            }
        }
        Ok(Self { dim, a: mat, eigenvalues: ev, eigenvectors: vecs })
    }

    /// Builds from the upper triangle listed row by row (a11, a12, ..., a22, ...).
    pub fn from_upper_triangle(entries: &[f64]) -> Result<Self> {
        let dim = match entries.len() {
            3 => 2,
            6 => 3,
            n => return Err(Error::Domain(format!("{n} upper-triangle entries do not describe a 2x2 or 3x3 matrix"))),
        };
        let mut full = vec![0.0; dim * dim];
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                full[i * dim + j] = entries[k];
                full[j * dim + i] = entries[k];
                k += 1;
            }
        }
        Self::new(dim, &full)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut full = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            full[i * n + i] = *d;
        }
        Self::new(n, &full)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> Vec<f64> {
        let n = self.dim;
        (0..n * n).map(|k| self.a[k / n][k % n]).collect()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.dim]
    }

    /// A x
    pub fn apply(&self, x: &Point) -> Point {
        let mut out = Point::zeros(self.dim);
        for i in 0..self.dim {
            out[i] = (0..self.dim).map(|j| self.a[i][j] * x[j]).sum();
        }
        out
    }

    /// A x · x
    pub fn quadratic_form(&self, x: &Point) -> f64 {
        self.apply(x).dot(x)
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues().iter().sum()
    }

    pub fn determinant(&self) -> f64 {
        self.eigenvalues().iter().product()
    }

    fn is_identity(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.a[i][j] == if i == j { 1.0 } else { 0.0 }))
    }

    /// A^{power} applied to x, through the spectral decomposition.
    fn spectral_apply(&self, x: &Point, power: f64) -> Point {
        let mut out = Point::zeros(self.dim);
        for k in 0..self.dim {
            let v = &self.eigenvectors[k];
            let coef: f64 = (0..self.dim).map(|i| v[i] * x[i]).sum::<f64>() * self.eigenvalues[k].powf(power);
            for i in 0..self.dim {
                out[i] += coef * v[i];
            }
        }
        out
    }

    fn coords_in_eigenbasis(&self, x: &Point) -> [f64; 3] {
        let mut y = [0.0; 3];
        for (k, yk) in y.iter_mut().enumerate().take(self.dim) {
            *yk = (0..self.dim).map(|i| self.eigenvectors[k][i] * x[i]).sum();
        }
        y
    }

    fn from_eigenbasis(&self, y: &[f64; 3]) -> Point {
        let mut out = Point::zeros(self.dim);
        for k in 0..self.dim {
            for i in 0..self.dim {
                out[i] += y[k] * self.eigenvectors[k][i];
            }
        }
        out
    }

    /// Closest boundary point by solving the Lagrange condition
    /// p = (I + tA)^{-1} x,  A p · p = 1, in the eigenbasis.
    fn closest_boundary_point(&self, x: &Point) -> Point {
        let n = self.dim;
        let y = self.coords_in_eigenbasis(x);
        let lam = &self.eigenvalues;
        let g = |t: f64| -> f64 {
            (0..n).map(|i| lam[i] * y[i] * y[i] / (1.0 + t * lam[i]).powi(2)).sum::<f64>() - 1.0
        };
        let project = |t: f64| -> [f64; 3] {
            let mut p = [0.0; 3];
            for i in 0..n {
                p[i] = y[i] / (1.0 + t * lam[i]);
            }
            p
        };
        let dist = |p: &[f64; 3]| -> f64 { (0..n).map(|i| (p[i] - y[i]).powi(2)).sum::<f64>().sqrt() };

        let g0 = g(0.0);
        if g0 == 0.0 {
            return *x;
        }
        let mut candidates: Vec<[f64; 3]> = Vec::new();
        let lam_max = lam[..n].iter().cloned().fold(0.0, f64::max);
        if g0 > 0.0 {
            let mut hi = 1.0 / lam_max;
            while g(hi) > 0.0 {
                hi *= 2.0;
            }
            candidates.push(project(bisect(&g, 0.0, hi)));
        } else {
            let lo = -1.0 / lam_max;
            let near = lo * (1.0 - 1e-15);
            if g(near) > 0.0 {
                candidates.push(project(bisect(&g, near, 0.0)));
            }
            // degenerate branch: x in the principal plane orthogonal to the
            // longest-curvature axis
            let group: Vec<usize> = (0..n).filter(|&i| (lam[i] - lam_max).abs() <= 1e-12 * lam_max).collect();
            let mut p = [0.0; 3];
            let mut q = 1.0;
            for i in (0..n).filter(|i| !group.contains(i)) {
                p[i] = y[i] / (1.0 - lam[i] / lam_max);
                q -= lam[i] * p[i] * p[i];
            }
            if q >= 0.0 {
                let free = (q / lam_max).sqrt();
                let gnorm: f64 = group.iter().map(|&i| y[i] * y[i]).sum::<f64>().sqrt();
                if gnorm > 0.0 {
                    for &i in &group {
                        p[i] = free * y[i] / gnorm;
                    }
                } else {
                    p[group[0]] = free;
                }
                candidates.push(p);
            }
        }
        let best = candidates
            .into_iter()
            .min_by(|a, b| dist(a).total_cmp(&dist(b)))
            .expect("closest-point search always yields a candidate");
        self.from_eigenbasis(&best)
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A bounded convex model domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Ball { center: Point, radius: f64 },
    Ellipsoid(Ellipsoid),
}

/// Boundary nodes with positive surface weights and unit outward normals.
#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point>,
}

impl BoundaryQuadrature {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut g: impl FnMut(&Point, &Point) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).zip(&self.normals).map(|((p, w), n)| w * g(p, n)).sum()
    }
}

impl Domain {
    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        if center.len() < 2 || center.len() > Point::MAX_DIM {
            return Err(Error::Capability(format!("dimension {} not supported", center.len())));
        }
        Ok(Domain::Ball { center: Point::new(center), radius })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Domain::Ball { center: Point::zeros(dim), radius: 1.0 }
    }

    pub fn ellipsoid(e: Ellipsoid) -> Self {
        Domain::Ellipsoid(e)
    }

    /// Parses `ball:R` (origin-centred, dimension from `dim`) or
    /// `ellipsoid:a11,a12,...` (row-major upper triangle).
    pub fn parse(literal: &str, dim: usize) -> Result<Self> {
        let (kind, rest) = literal
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("domain literal '{literal}' lacks ':'")))?;
        let nums: std::result::Result<Vec<f64>, _> = rest.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let nums = nums.map_err(|e| Error::Domain(format!("bad number in '{literal}': {e}")))?;
        match kind {
            "ball" => {
                if nums.len() != 1 {
                    return Err(Error::Domain("ball literal takes a single radius".into()));
                }
                Domain::ball(&vec![0.0; dim], nums[0])
            }
            "ellipsoid" => {
                let e = Ellipsoid::from_upper_triangle(&nums)?;
                if e.dim() != dim {
                    return Err(Error::Domain(format!("ellipsoid literal has dimension {}, expected {dim}", e.dim())));
                }
                Ok(Domain::Ellipsoid(e))
            }
            other => Err(Error::Domain(format!("unknown domain kind '{other}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.dim(),
            Domain::Ellipsoid(e) => e.dim(),
        }
    }

    pub fn center(&self) -> Point {
        match self {
            Domain::Ball { center, .. } => *center,
            Domain::Ellipsoid(e) => Point::zeros(e.dim()),
        }
    }

    pub fn as_ball(&self) -> Option<(Point, f64)> {
        match self {
            Domain::Ball { center, radius } => Some((*center, *radius)),
            Domain::Ellipsoid(_) => None,
        }
    }

    /// Strict interior membership.
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Domain::Ball { center, radius } => (*x - *center).norm_sq() < radius * radius,
            Domain::Ellipsoid(e) => e.quadratic_form(x) < 1.0,
        }
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn delta(&self, x: &Point) -> f64 {
        match self {
            Domain::Ball { center, radius } => radius - (*x - *center).norm(),
            Domain::Ellipsoid(e) => {
                let q = e.quadratic_form(x);
                if q == 1.0 {
                    return 0.0;
                }
                let p = e.closest_boundary_point(x);
                let d = x.dist(&p);
                if q < 1.0 {
                    d
                } else {
                    -d
                }
            }
        }
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim();
        match self {
            Domain::Ball { radius, .. } => unit_ball_volume(n) * radius.powi(n as i32),
            Domain::Ellipsoid(e) => unit_ball_volume(n) / e.determinant().sqrt(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Ellipsoid(e) => {
                let lmin = e.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
                2.0 / lmin.sqrt()
            }
        }
    }

    /// (|Ω|, diam Ω)
    pub fn measures(&self) -> (f64, f64) {
        (self.volume(), self.diameter())
    }

    /// Parameter interval `(t0, t1)` with `x + t ω ∈ Ω` exactly for t0 < t < t1.
    pub fn ray_interval(&self, x: &Point, dir: &Point) -> Option<(f64, f64)> {
        let (a, b, c) = match self {
            Domain::Ball { center, radius } => {
                let d = *x - *center;
                (dir.norm_sq(), dir.dot(&d), d.norm_sq() - radius * radius)
            }
            Domain::Ellipsoid(e) => {
                let ad = e.apply(dir);
                (ad.dot(dir), ad.dot(x), e.quadratic_form(x) - 1.0)
            }
        };
        let disc = b * b - a * c;
        if disc <= 0.0 {
            return None;
        }
        let q = -(b + b.signum() * disc.sqrt());
        let (r1, r2) = if q == 0.0 {
            let r = (-c / a).sqrt();
            (-r, r)
        } else {
            (q / a, c / q)
        };
        Some((r1.min(r2), r1.max(r2)))
    }

    /// Affine map x = c + M u sending the unit ball onto Ω; returns (c, M u).
    pub fn from_unit(&self, u: &Point) -> Point {
        match self {
            Domain::Ball { center, radius } => *center + *u * *radius,
            Domain::Ellipsoid(e) => e.spectral_apply(u, -0.5),
        }
    }

    /// |det M| of [`Domain::from_unit`].
    pub fn unit_jacobian(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => radius.powi(self.dim() as i32),
            Domain::Ellipsoid(e) => 1.0 / e.determinant().sqrt(),
        }
    }

    /// M^{-T} u, the (unnormalized) image normal of the unit-sphere normal u.
    fn cotransform(&self, u: &Point) -> Point {
        match self {
            Domain::Ball { radius, .. } => *u * (1.0 / radius),
            Domain::Ellipsoid(e) => e.spectral_apply(u, 0.5),
        }
    }

    /// Outward unit normal at (or nearest to) a boundary point.
    pub fn outward_normal(&self, p: &Point) -> Point {
        let v = match self {
            Domain::Ball { center, .. } => *p - *center,
            Domain::Ellipsoid(e) => e.apply(p),
        };
        v.normalized().unwrap_or_else(|| Point::axis(self.dim(), 0, 1.0))
    }

    /// Fixed boundary rule: trapezoid in angle for N = 2, Gauss–Legendre in
    /// cos θ times trapezoid in φ for N = 3, mapped through x = c + M u.
    pub fn boundary_quadrature(&self, order: usize) -> Result<BoundaryQuadrature> {
        if order == 0 {
            return Err(Error::Domain("boundary rule order must be >= 1".into()));
        }
        let n = self.dim();
        let jac = self.unit_jacobian();
        let mut q = BoundaryQuadrature { nodes: Vec::new(), weights: Vec::new(), normals: Vec::new() };
        let mut push = |u: Point, sphere_weight: f64| {
            let co = self.cotransform(&u);
            q.nodes.push(self.from_unit(&u));
            q.weights.push(sphere_weight * jac * co.norm());
            q.normals.push(co.normalized().expect("cotransform of unit vector is nonzero"));
        };
        match n {
            2 => {
                for k in 0..order {
                    let th = 2.0 * PI * k as f64 / order as f64;
                    push(Point::new(&[th.cos(), th.sin()]), 2.0 * PI / order as f64);
                }
            }
            3 => {
                let (z, w) = gauss_legendre(order);
                let m = 2 * order;
                for (zi, wi) in z.iter().zip(&w) {
                    let rho = (1.0 - zi * zi).max(0.0).sqrt();
                    for k in 0..m {
                        let ph = 2.0 * PI * k as f64 / m as f64;
                        push(Point::new(&[rho * ph.cos(), rho * ph.sin(), *zi]), wi * 2.0 * PI / m as f64);
                    }
                }
            }
            _ => return Err(Error::Capability(format!("boundary quadrature for N = {n} is not implemented"))),
        }
        Ok(q)
    }

    /// |∂Ω|: closed form for balls, a converged boundary rule for ellipsoids.
    pub fn surface_area(&self) -> Result<f64> {
        let n = self.dim();
        match self {
            Domain::Ball { radius, .. } => Ok(sphere_area(n) * radius.powi(n as i32 - 1)),
            Domain::Ellipsoid(e) if e.is_identity() => Ok(sphere_area(n)),
            Domain::Ellipsoid(_) => {
                let order = if n == 2 { 4096 } else { 160 };
                Ok(self.boundary_quadrature(order)?.total_weight())
            }
        }
    }
}
