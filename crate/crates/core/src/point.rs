use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point (or vector) in R^N for N <= 3, stored inline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: [f64; 3],
    dim: usize,
}

impl Point {
    pub const MAX_DIM: usize = 3;

    /// Panics if `coords.len()` is 0 or exceeds [`Point::MAX_DIM`].
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= Self::MAX_DIM,
            "point dimension {} not supported",
            coords.len()
        );
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c, dim: coords.len() }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(&[0.0; 3][..dim])
    }

    /// The `i`-th standard basis vector scaled by `len`.
    pub fn axis(dim: usize, i: usize, len: f64) -> Self {
        let mut p = Self::zeros(dim);
        p.coords[i] = len;
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.coords[0] * other.coords[0]
            + self.coords[1] * other.coords[1]
            + self.coords[2] * other.coords[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    /// `self + t * dir`
    pub fn offset(&self, dir: &Point, t: f64) -> Point {
        let mut p = *self;
        for i in 0..3 {
            p.coords[i] += t * dir.coords[i];
        }
        p
    }

    /// Unit vector in the direction of `self`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        let d = self.dim;
        &mut self.coords[..d][i]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        self.offset(&rhs, 1.0)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        self.offset(&rhs, -1.0)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(mut self, t: f64) -> Point {
        for c in &mut self.coords {
            *c *= t;
        }
        self
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

impl From<&[f64]> for Point {
    fn from(c: &[f64]) -> Self {
        Point::new(c)
    }
}
