//! Evaluable functions on R^N with the regularity metadata the quadrature
//! routines rely on.

use std::fmt;
use std::sync::Arc;

use crate::geometry::Domain;
use crate::point::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    C2Interior,
    Holder(f64),
    Lipschitz,
}

impl Smoothness {
    /// Hölder exponent in (0, 1]; C² and Lipschitz count as 1.
    pub fn exponent(&self) -> f64 {
        match self {
            Smoothness::Holder(b) => *b,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// Vanishes outside the closure of the domain.
    Compact(Domain),
    AllSpace,
    /// Vanishes inside the domain.
    Exterior(Domain),
}

pub type PointFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type IncrementFn = Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>;

pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &Point) -> f64;

    fn smoothness(&self) -> Smoothness {
        Smoothness::C2Interior
    }

    fn support(&self) -> Support {
        Support::AllSpace
    }

    /// Domain whose boundary is the only place where the field may fail to
    /// be smooth.
    fn interface(&self) -> Option<Domain> {
        match self.support() {
            Support::Compact(d) | Support::Exterior(d) => Some(d),
            Support::AllSpace => None,
        }
    }

    /// One-sided behaviour `dist^β` at the interface (1 means smooth up to
    /// it from each side, possibly with a jump).
    fn interface_exponent(&self) -> f64 {
        1.0
    }

    /// u(x + z) - u(x); override when it can be formed without cancellation.
    fn increment(&self, x: &Point, z: &Point) -> f64 {
        self.eval(&(*x + *z)) - self.eval(x)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Point) -> f64 {
        (**self).eval(x)
    }
    fn smoothness(&self) -> Smoothness {
        (**self).smoothness()
    }
    fn support(&self) -> Support {
        (**self).support()
    }
    fn interface(&self) -> Option<Domain> {
        (**self).interface()
    }
    fn interface_exponent(&self) -> f64 {
        (**self).interface_exponent()
    }
    fn increment(&self, x: &Point, z: &Point) -> f64 {
        (**self).increment(x, z)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Point) -> f64 {
        (**self).eval(x)
    }
    fn smoothness(&self) -> Smoothness {
        (**self).smoothness()
    }
    fn support(&self) -> Support {
        (**self).support()
    }
    fn interface(&self) -> Option<Domain> {
        (**self).interface()
    }
    fn interface_exponent(&self) -> f64 {
        (**self).interface_exponent()
    }
    fn increment(&self, x: &Point, z: &Point) -> f64 {
        (**self).increment(x, z)
    }
}

/// A field given by a closure plus declared metadata.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    f: PointFn,
    increment: Option<IncrementFn>,
    smoothness: Smoothness,
    support: Support,
    interface: Option<Domain>,
    interface_exponent: f64,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl FnField {
    pub fn new(dim: usize, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            increment: None,
            smoothness: Smoothness::C2Interior,
            support: Support::AllSpace,
            interface: None,
            interface_exponent: 1.0,
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, move |_| c).with_increment(|_, _| 0.0)
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    pub fn with_support(mut self, s: Support) -> Self {
        if let Support::Compact(d) | Support::Exterior(d) = &s {
            self.interface.get_or_insert_with(|| d.clone());
        }
        self.support = s;
        self
    }

    pub fn with_interface(mut self, d: Domain, exponent: f64) -> Self {
        self.interface = Some(d);
        self.interface_exponent = exponent;
        self
    }

    pub fn with_increment(mut self, inc: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static) -> Self {
        self.increment = Some(Arc::new(inc));
        self
    }
}

impl ScalarField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
    fn support(&self) -> Support {
        self.support.clone()
    }
    fn interface(&self) -> Option<Domain> {
        self.interface.clone()
    }
    fn interface_exponent(&self) -> f64 {
        self.interface_exponent
    }
    fn increment(&self, x: &Point, z: &Point) -> f64 {
        match &self.increment {
            Some(inc) => inc(x, z),
            None => (self.f)(&(*x + *z)) - (self.f)(x),
        }
    }
}

/// A function on Ω evaluated through its trivial extension E_Ω f.
#[derive(Clone)]
pub struct CompactField {
    domain: Domain,
    f: PointFn,
    holder: f64,
    radial: Option<RadialFn>,
    constant: Option<f64>,
}

impl fmt::Debug for CompactField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompactField")
            .field("domain", &self.domain)
            .field("holder", &self.holder)
            .field("radial", &self.radial.is_some())
            .field("constant", &self.constant)
            .finish()
    }
}

impl CompactField {
    /// Panics unless `0 < holder <= 1`.
    pub fn new(domain: Domain, holder: f64, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        assert!(holder > 0.0 && holder <= 1.0, "Hölder exponent must lie in (0, 1]");
        Self { domain, f: Arc::new(f), holder, radial: None, constant: None }
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        let mut out = Self::new(domain, 1.0, move |_| c);
        out.radial = Some(Arc::new(move |_| c));
        out.constant = Some(c);
        out
    }

    /// f(x) = profile(|x - center|) on a ball.
    pub fn radial(domain: Domain, holder: f64, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let profile: RadialFn = Arc::new(profile);
        let center = domain.center();
        let p = profile.clone();
        let mut out = Self::new(domain, holder, move |x| p((*x - center).norm()));
        out.radial = Some(profile);
        out
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn holder(&self) -> f64 {
        self.holder
    }

    /// Radial profile about the ball centre, when the domain is a ball.
    pub fn radial_profile(&self) -> Option<&RadialFn> {
        match self.domain {
            Domain::Ball { .. } => self.radial.as_ref(),
            Domain::Ellipsoid(_) => None,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    /// Value of f itself (no masking).
    pub fn raw(&self, x: &Point) -> f64 {
        (self.f)(x)
    }
}

impl ScalarField for CompactField {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn eval(&self, x: &Point) -> f64 {
        if self.domain.contains(x) {
            (self.f)(x)
        } else {
            0.0
        }
    }
    fn smoothness(&self) -> Smoothness {
        if self.constant.is_some() {
            Smoothness::C2Interior
        } else if self.holder >= 1.0 {
            Smoothness::Lipschitz
        } else {
            Smoothness::Holder(self.holder)
        }
    }
    fn support(&self) -> Support {
        Support::Compact(self.domain.clone())
    }
    fn increment(&self, x: &Point, z: &Point) -> f64 {
        let y = *x + *z;
        match (self.domain.contains(x), self.domain.contains(&y), self.constant) {
            (true, true, Some(_)) => 0.0,
            _ => self.eval(&y) - self.eval(x),
        }
    }
}

/// (1 - |y - a|² / r²)^3_+, a C² bump with cancellation-free increments.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicBump {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

impl CubicBump {
    pub fn new(center: &[f64], radius: f64, amplitude: f64) -> Self {
        Self { center: Point::new(center), radius, amplitude }
    }

    fn q(&self, x: &Point) -> f64 {
        1.0 - (*x - self.center).norm_sq() / (self.radius * self.radius)
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let q = self.q(x);
        if q <= 0.0 {
            return Point::zeros(x.dim());
        }
        (*x - self.center) * (-6.0 * self.amplitude * q * q / (self.radius * self.radius))
    }
}

impl ScalarField for CubicBump {
    fn dim(&self) -> usize {
        self.center.dim()
    }
    fn eval(&self, x: &Point) -> f64 {
        let q = self.q(x);
        if q > 0.0 {
            self.amplitude * q * q * q
        } else {
            0.0
        }
    }
    fn support(&self) -> Support {
        Support::Compact(Domain::Ball { center: self.center, radius: self.radius })
    }
    fn interface(&self) -> Option<Domain> {
        None
    }
    fn increment(&self, x: &Point, z: &Point) -> f64 {
        let q = self.q(x);
        let dq = -(2.0 * (*x - self.center).dot(z) + z.norm_sq()) / (self.radius * self.radius);
        let q1 = q + dq;
        if q > 0.0 && q1 > 0.0 {
            self.amplitude * dq * (3.0 * q * q + 3.0 * q * dq + dq * dq)
        } else {
            self.eval(&(*x + *z)) - self.eval(x)
        }
    }
}

/// exp(-1 / (1 - |y - a|² / r²)) inside the ball, a C^∞ bump.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBump {
    pub center: Point,
    pub radius: f64,
}

impl SmoothBump {
    pub fn new(center: &[f64], radius: f64) -> Self {
        Self { center: Point::new(center), radius }
    }
}

impl ScalarField for SmoothBump {
    fn dim(&self) -> usize {
        self.center.dim()
    }
    fn eval(&self, x: &Point) -> f64 {
        let q = 1.0 - (*x - self.center).norm_sq() / (self.radius * self.radius);
        if q > 0.0 {
            (-1.0 / q).exp()
        } else {
            0.0
        }
    }
    fn support(&self) -> Support {
        Support::Compact(Domain::Ball { center: self.center, radius: self.radius })
    }
    fn interface(&self) -> Option<Domain> {
        None
    }
}
