//! Points, rectangles and analytic level-set descriptions of interfaces.
//!
//! The interface is the zero set of a level set function `phi`. Points with
//! `phi < 0` belong to the minus subdomain, points with `phi > 0` to the plus
//! subdomain.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Absolute tolerance on `|phi|` for a point to count as lying on the interface.
pub const PROJ_TOL: f64 = 1e-12;
/// Newton iteration cap for [`project_to_interface`].
pub const PROJ_MAX_ITER: usize = 50;
const PROJ_DAMPING: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Polar angle around `center`, in `[0, 2pi)`.
    pub fn angle_about(self, center: Point2) -> f64 {
        let d = self - center;
        let t = d.y.atan2(d.x);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        p * self
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangle `(x0, x1) x (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Which side of the interface a triangle (or a query) belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    Minus,
    Plus,
}

impl RegionTag {
    pub fn other(self) -> RegionTag {
        match self {
            RegionTag::Minus => RegionTag::Plus,
            RegionTag::Plus => RegionTag::Minus,
        }
    }

    /// Region of a point from the sign of `phi`; `None` on the interface.
    pub fn from_phi(phi: f64) -> Option<RegionTag> {
        if phi < 0.0 {
            Some(RegionTag::Minus)
        } else if phi > 0.0 {
            Some(RegionTag::Plus)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::Minus => "minus",
            RegionTag::Plus => "plus",
        }
    }
}

/// Analytic level set function with its gradient.
pub trait LevelSet: Send + Sync {
    fn value(&self, z: Point2) -> f64;
    fn gradient(&self, z: Point2) -> Point2;
}

/// Signed value `phi(z)`: negative in the minus subdomain, positive in the plus one.
pub fn signed_value(ls: &dyn LevelSet, z: Point2) -> f64 {
    ls.value(z)
}

/// Moves `z` onto the interface by damped Newton steps along `grad phi`.
///
/// Each step solves the linearization `phi(p) + grad phi(p) . d = 0` for the
/// update `d` parallel to the gradient. A step that increases `|phi|` is
/// halved until it does not.
pub fn project_to_interface(ls: &dyn LevelSet, z: Point2) -> Result<Point2> {
    let mut p = z;
    let mut phi = ls.value(p);
    for _ in 0..PROJ_MAX_ITER {
        if phi.abs() <= PROJ_TOL {
            return Ok(p);
        }
        let g = ls.gradient(p);
        let gg = g.norm_squared();
        if !(gg > 0.0) || !gg.is_finite() {
            break;
        }
        let step = g * (phi / gg);
        let mut lambda = 1.0;
        let mut trial = p - step * lambda;
        let mut phi_trial = ls.value(trial);
        let mut halvings = 0;
        while !(phi_trial.abs() < phi.abs()) && halvings < 30 {
            lambda *= PROJ_DAMPING;
            trial = p - step * lambda;
            phi_trial = ls.value(trial);
            halvings += 1;
        }
        if !(phi_trial.abs() < phi.abs()) {
            break;
        }
        p = trial;
        phi = phi_trial;
    }
    if phi.abs() <= PROJ_TOL {
        Ok(p)
    } else {
        Err(Error::NoConvergence {
            x: z.x,
            y: z.y,
            residual: phi.abs(),
        })
    }
}

/// Circle `|z - center| = radius`, minus inside: `phi = |z - c|^2 - r^2`.
#[derive(Clone, Copy, Debug)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

impl LevelSet for Circle {
    fn value(&self, z: Point2) -> f64 {
        (z - self.center).norm_squared() - self.radius * self.radius
    }

    fn gradient(&self, z: Point2) -> Point2 {
        (z - self.center) * 2.0
    }
}

/// Star-shaped curve `r = base + amplitude * sin(petals * theta)` about the origin,
/// minus inside: `phi = r - base - amplitude * sin(petals * theta)`.
#[derive(Clone, Copy, Debug)]
pub struct Flower {
    pub base: f64,
    pub amplitude: f64,
    pub petals: f64,
}

impl Flower {
    /// `r = 1/2 + sin(5 theta) / 7`.
    pub fn five_petal() -> Self {
        Flower {
            base: 0.5,
            amplitude: 1.0 / 7.0,
            petals: 5.0,
        }
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        self.base + self.amplitude * (self.petals * theta).sin()
    }
}

impl LevelSet for Flower {
    fn value(&self, z: Point2) -> f64 {
        let r = z.norm();
        let theta = z.y.atan2(z.x);
        r - self.radius_at(theta)
    }

    fn gradient(&self, z: Point2) -> Point2 {
        let r2 = z.norm_squared();
        let r = r2.sqrt();
        let theta = z.y.atan2(z.x);
        let dtheta = Point2::new(-z.y / r2, z.x / r2);
        let c = self.amplitude * self.petals * (self.petals * theta).cos();
        Point2::new(z.x / r, z.y / r) - dtheta * c
    }
}

/// Straight line `normal . z = offset`, minus where `normal . z < offset`.
#[derive(Clone, Copy, Debug)]
pub struct HalfPlane {
    pub normal: Point2,
    pub offset: f64,
}

impl LevelSet for HalfPlane {
    fn value(&self, z: Point2) -> f64 {
        self.normal.dot(z) - self.offset
    }

    fn gradient(&self, _z: Point2) -> Point2 {
        self.normal
    }
}

/// Two half-lines leaving `corner` in the +x and +y directions; the minus side
/// is the open quadrant `x > cx, y > cy`: `phi = -min(x - cx, y - cy)`.
#[derive(Clone, Copy, Debug)]
pub struct QuadrantCorner {
    pub corner: Point2,
}

impl LevelSet for QuadrantCorner {
    fn value(&self, z: Point2) -> f64 {
        -(z.x - self.corner.x).min(z.y - self.corner.y)
    }

    fn gradient(&self, z: Point2) -> Point2 {
        if z.x - self.corner.x <= z.y - self.corner.y {
            Point2::new(-1.0, 0.0)
        } else {
            Point2::new(0.0, -1.0)
        }
    }
}

/// Two full lines crossing at `center`; the minus side is the first and
/// third quadrant: `phi = -(x - cx)(y - cy)`.
#[derive(Clone, Copy, Debug)]
pub struct CrossLines {
    pub center: Point2,
}

impl LevelSet for CrossLines {
    fn value(&self, z: Point2) -> f64 {
        -(z.x - self.center.x) * (z.y - self.center.y)
    }

    fn gradient(&self, z: Point2) -> Point2 {
        Point2::new(-(z.y - self.center.y), -(z.x - self.center.x))
    }
}
