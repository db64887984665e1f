//! Benchmark interface problems with closed-form solutions.
//!
//! Every problem provides the coefficient, the source term, the flux jump on
//! the interface and the exact solution on both sides. Jump data is derived
//! from the solution branches, so each problem is consistent by construction;
//! [`check_invariants`] verifies this numerically.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::geometry::{Circle, CrossLines, Flower, HalfPlane, LevelSet, Point2, QuadrantCorner, Rect, RegionTag};

/// One elliptic interface problem `-div(beta grad u) = f` with jump conditions.
pub trait LevelSetProblem: Send + Sync {
    fn name(&self) -> String;
    fn domain(&self) -> Rect;
    fn level_set(&self) -> &dyn LevelSet;
    fn beta(&self, region: RegionTag, z: Point2) -> f64;
    fn source(&self, region: RegionTag, z: Point2) -> f64;
    fn exact_u(&self, region: RegionTag, z: Point2) -> f64;
    fn exact_grad(&self, region: RegionTag, z: Point2) -> Point2;

    /// `g = beta+ du+/dn - beta- du-/dn` with `n` pointing from minus to plus.
    fn flux_jump(&self, z: Point2) -> f64 {
        let n = self.level_set().gradient(z);
        let n = n * (1.0 / n.norm());
        self.beta(RegionTag::Plus, z) * self.exact_grad(RegionTag::Plus, z).dot(n)
            - self.beta(RegionTag::Minus, z) * self.exact_grad(RegionTag::Minus, z).dot(n)
    }

    /// False when the flux jump vanishes identically.
    fn has_flux_jump(&self) -> bool {
        false
    }

    /// True when `u+ - u-` is nonzero on the interface.
    fn has_value_jump(&self) -> bool {
        false
    }

    /// Smooth extension of the value jump `u+ - u-` off the interface.
    fn value_jump(&self, z: Point2) -> f64 {
        self.exact_u(RegionTag::Plus, z) - self.exact_u(RegionTag::Minus, z)
    }

    /// Points where the solution is not smooth.
    fn singular_points(&self) -> Vec<Point2> {
        Vec::new()
    }

    /// A point known to lie in the minus subdomain.
    fn witness_minus(&self) -> Point2;

    /// Interface point for the parameter `s` in `[0, 1)`. Used for sampling.
    fn interface_point(&self, s: f64) -> Point2;
}

/// Solutions of the form `r^p F(theta)` about a center, with gradient
/// `p r^(p-1) F e_r + r^(p-1) F' e_theta`.
fn polar_power_grad(z: Point2, center: Point2, p: f64, f: f64, df: f64) -> Point2 {
    let d = z - center;
    let r = d.norm();
    let (er, et) = (d * (1.0 / r), Point2::new(-d.y / r, d.x / r));
    let rp1 = r.powf(p - 1.0);
    er * (p * rp1 * f) + et * (rp1 * df)
}

/// `t + 2 pi k` for the integer `k` that brings it closest to `center`.
fn unwrap_near(t: f64, center: f64) -> f64 {
    t + 2.0 * PI * ((center - t) / (2.0 * PI)).round()
}

// ---------------------------------------------------------------------------

/// Circular interface of radius 1/2 on `(-1, 1)^2` with `u = r^3 / beta` inside
/// and a shifted `r^3 / beta+` outside, so `u` is continuous and `g = 0`.
#[derive(Clone, Debug)]
pub struct Example51 {
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub circle: Circle,
}

pub fn example_51(beta_minus: f64, beta_plus: f64) -> Example51 {
    assert!(beta_minus > 0.0 && beta_plus > 0.0);
    Example51 {
        beta_minus,
        beta_plus,
        circle: Circle {
            center: Point2::new(0.0, 0.0),
            radius: 0.5,
        },
    }
}

impl LevelSetProblem for Example51 {
    fn name(&self) -> String {
        format!("ex51(beta-={},beta+={})", self.beta_minus, self.beta_plus)
    }
    fn domain(&self) -> Rect {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }
    fn level_set(&self) -> &dyn LevelSet {
        &self.circle
    }
    fn beta(&self, region: RegionTag, _z: Point2) -> f64 {
        match region {
            RegionTag::Minus => self.beta_minus,
            RegionTag::Plus => self.beta_plus,
        }
    }
    fn source(&self, _region: RegionTag, z: Point2) -> f64 {
        -9.0 * z.norm()
    }
    fn exact_u(&self, region: RegionTag, z: Point2) -> f64 {
        let r3 = z.norm().powi(3);
        match region {
            RegionTag::Minus => r3 / self.beta_minus,
            RegionTag::Plus => {
                r3 / self.beta_plus + (1.0 / self.beta_minus - 1.0 / self.beta_plus) * self.circle.radius.powi(3)
            }
        }
    }
    fn exact_grad(&self, region: RegionTag, z: Point2) -> Point2 {
        z * (3.0 * z.norm() / self.beta(region, z))
    }
    fn flux_jump(&self, _z: Point2) -> f64 {
        0.0
    }
    fn witness_minus(&self) -> Point2 {
        Point2::new(0.1, 0.0)
    }
    fn interface_point(&self, s: f64) -> Point2 {
        let t = 2.0 * PI * s;
        Point2::new(t.cos(), t.sin()) * self.circle.radius
    }
}

// ---------------------------------------------------------------------------

/// Five-petal flower interface on `(-1, 1)^2` with `beta- = 1`, `beta+ = 10`.
///
/// By default the exponential branch `e^(r^2)` lives inside the flower and the
/// branch `0.1 r^4 - 0.01 ln(2r)` outside. `swap_branches` exchanges them; the
/// logarithm is then evaluated at the origin, where it is infinite.
#[derive(Clone, Debug)]
pub struct Example52 {
    pub swap_branches: bool,
    pub flower: Flower,
}

pub fn example_52() -> Example52 {
    Example52 {
        swap_branches: false,
        flower: Flower::five_petal(),
    }
}

impl Example52 {
    fn exp_branch(&self, region: RegionTag) -> bool {
        (region == RegionTag::Minus) != self.swap_branches
    }
}

impl LevelSetProblem for Example52 {
    fn name(&self) -> String {
        if self.swap_branches {
            "ex52(swapped)".into()
        } else {
            "ex52".into()
        }
    }
    fn domain(&self) -> Rect {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }
    fn level_set(&self) -> &dyn LevelSet {
        &self.flower
    }
    fn beta(&self, region: RegionTag, _z: Point2) -> f64 {
        match region {
            RegionTag::Minus => 1.0,
            RegionTag::Plus => 10.0,
        }
    }
    fn source(&self, region: RegionTag, z: Point2) -> f64 {
        let s = z.norm_squared();
        let lap = if self.exp_branch(region) {
            (4.0 * s + 4.0) * s.exp()
        } else {
            1.6 * s
        };
        -self.beta(region, z) * lap
    }
    fn exact_u(&self, region: RegionTag, z: Point2) -> f64 {
        let s = z.norm_squared();
        if self.exp_branch(region) {
            s.exp()
        } else {
            0.1 * s * s - 0.01 * (2.0 * s.sqrt()).ln()
        }
    }
    fn exact_grad(&self, region: RegionTag, z: Point2) -> Point2 {
        let s = z.norm_squared();
        if self.exp_branch(region) {
            z * (2.0 * s.exp())
        } else {
            z * (0.4 * s - 0.01 / s)
        }
    }
    fn has_flux_jump(&self) -> bool {
        true
    }
    fn has_value_jump(&self) -> bool {
        true
    }
    fn witness_minus(&self) -> Point2 {
        Point2::new(0.1, 0.1)
    }
    fn interface_point(&self, s: f64) -> Point2 {
        let t = 2.0 * PI * s;
        Point2::new(t.cos(), t.sin()) * self.flower.radius_at(t)
    }
}

// ---------------------------------------------------------------------------

/// Exponent of the corner singularity for a coefficient `beta` in one quadrant
/// and 1 in the other three. Solves `tan(3a) = -beta tan(a)` with
/// `a = mu pi / 4` on the branch through `mu = 1` at `beta = 1`.
pub fn corner_exponent(beta_minus: f64) -> f64 {
    4.0 / PI * ((3.0 + beta_minus) / (1.0 + 3.0 * beta_minus)).sqrt().atan()
}

/// The exponent formula without the arctangent. It does not satisfy the
/// interface conditions and is kept only for comparison in tests.
pub fn corner_exponent_without_arctan(beta_minus: f64) -> f64 {
    4.0 / PI * ((3.0 + beta_minus) / (1.0 + 3.0 * beta_minus)).sqrt()
}

/// One quadrant with coefficient `beta-`, the rest with 1, on a unit square.
/// The corner sits at the square's center, which is the origin: the square is
/// `(-1/2, 1/2)^2`, the unit square shifted so that coordinates near the
/// singularity keep full floating-point resolution. The minus quadrant is up
/// and right.
#[derive(Clone, Debug)]
pub struct Example53 {
    pub beta_minus: f64,
    pub mu: f64,
    pub nu: f64,
    pub corner: QuadrantCorner,
}

pub fn example_53(beta_minus: f64) -> Example53 {
    assert!(beta_minus > 0.0);
    example_53_with_exponent(beta_minus, corner_exponent(beta_minus))
}

/// Same problem with an arbitrary exponent; `nu` still enforces the flux condition.
pub fn example_53_with_exponent(beta_minus: f64, mu: f64) -> Example53 {
    let nu = -beta_minus * (mu * FRAC_PI_4).sin() / (3.0 * mu * FRAC_PI_4).sin();
    Example53 {
        beta_minus,
        mu,
        nu,
        corner: QuadrantCorner {
            corner: Point2::new(0.0, 0.0),
        },
    }
}

impl Example53 {
    /// Angle about the corner on the branch interval of `region`. Each branch
    /// is continued smoothly a little way past its own rays.
    fn theta(&self, region: RegionTag, z: Point2) -> f64 {
        let center = match region {
            RegionTag::Minus => FRAC_PI_4,
            RegionTag::Plus => 5.0 * FRAC_PI_4,
        };
        unwrap_near(z.angle_about(self.corner.corner), center)
    }

    fn angular(&self, region: RegionTag, t: f64) -> (f64, f64) {
        let mu = self.mu;
        match region {
            RegionTag::Minus => ((mu * (t - FRAC_PI_4)).cos(), -mu * (mu * (t - FRAC_PI_4)).sin()),
            RegionTag::Plus => {
                let a = mu * (t - 5.0 * FRAC_PI_4);
                (self.nu * a.cos(), -self.nu * mu * a.sin())
            }
        }
    }
}

impl LevelSetProblem for Example53 {
    fn name(&self) -> String {
        format!("ex53(beta-={})", self.beta_minus)
    }
    fn domain(&self) -> Rect {
        Rect::new(-0.5, -0.5, 0.5, 0.5)
    }
    fn level_set(&self) -> &dyn LevelSet {
        &self.corner
    }
    fn beta(&self, region: RegionTag, _z: Point2) -> f64 {
        match region {
            RegionTag::Minus => self.beta_minus,
            RegionTag::Plus => 1.0,
        }
    }
    fn source(&self, _region: RegionTag, _z: Point2) -> f64 {
        0.0
    }
    fn exact_u(&self, region: RegionTag, z: Point2) -> f64 {
        let r = z.dist(self.corner.corner);
        if r == 0.0 {
            return 0.0;
        }
        r.powf(self.mu) * self.angular(region, self.theta(region, z)).0
    }
    fn exact_grad(&self, region: RegionTag, z: Point2) -> Point2 {
        let (f, df) = self.angular(region, self.theta(region, z));
        polar_power_grad(z, self.corner.corner, self.mu, f, df)
    }
    fn flux_jump(&self, _z: Point2) -> f64 {
        0.0
    }
    fn singular_points(&self) -> Vec<Point2> {
        vec![self.corner.corner]
    }
    fn witness_minus(&self) -> Point2 {
        Point2::new(0.25, 0.25)
    }
    fn interface_point(&self, s: f64) -> Point2 {
        // first half walks the vertical ray, second half the horizontal one
        let c = self.corner.corner;
        if s < 0.5 {
            Point2::new(c.x, c.y + 0.5 * (0.02 + 0.96 * 2.0 * s))
        } else {
            Point2::new(c.x + 0.5 * (0.02 + 0.96 * (2.0 * s - 1.0)), c.y)
        }
    }
}

// ---------------------------------------------------------------------------

pub const KELLOGG_EPSILON: f64 = 0.1;
pub const KELLOGG_NU: f64 = FRAC_PI_4;
pub const KELLOGG_XI: f64 = -14.922_556_510_445_515_2;
pub const KELLOGG_R: f64 = 161.447_638_797_588_1;

/// Checkerboard coefficient on the unit square `(-1/2, 1/2)^2`: `R` in the
/// first and third quadrants about the origin (the minus region), 1 in the
/// others.
///
/// The flux jump is taken from the solution branches. With the constants as
/// listed it is not exactly zero but about `1e-6 r^(eps - 1)`.
#[derive(Clone, Debug)]
pub struct Example54 {
    pub cross: CrossLines,
}

pub fn example_54() -> Example54 {
    Example54 {
        cross: CrossLines {
            center: Point2::new(0.0, 0.0),
        },
    }
}

/// Angular factor of the Kellogg solution and its derivative, on quadrant `q`.
pub fn kellogg_angular(q: usize, t: f64) -> (f64, f64) {
    let (e, nu, xi) = (KELLOGG_EPSILON, KELLOGG_NU, KELLOGG_XI);
    let (amp, shift) = match q {
        0 => (((FRAC_PI_2 - xi) * e).cos(), -FRAC_PI_2 + nu),
        1 => ((nu * e).cos(), -PI + xi),
        2 => ((xi * e).cos(), -PI - nu),
        _ => (((FRAC_PI_2 - nu) * e).cos(), -3.0 * FRAC_PI_2 - xi),
    };
    let a = (t + shift) * e;
    (amp * a.cos(), -amp * e * a.sin())
}

impl Example54 {
    /// Quadrant of `z`, resolving points on the lines by the region tag.
    fn quadrant(&self, region: RegionTag, t: f64) -> usize {
        let q = ((t / FRAC_PI_2) as usize).min(3);
        let q_region = if q % 2 == 0 { RegionTag::Minus } else { RegionTag::Plus };
        if q_region == region {
            return q;
        }
        // on a dividing ray: pick the neighbouring quadrant of the right region
        let frac = t / FRAC_PI_2 - q as f64;
        if frac < 0.5 {
            (q + 3) % 4
        } else {
            (q + 1) % 4
        }
    }
}

impl LevelSetProblem for Example54 {
    fn name(&self) -> String {
        "ex54".into()
    }
    fn domain(&self) -> Rect {
        Rect::new(-0.5, -0.5, 0.5, 0.5)
    }
    fn level_set(&self) -> &dyn LevelSet {
        &self.cross
    }
    fn beta(&self, region: RegionTag, _z: Point2) -> f64 {
        match region {
            RegionTag::Minus => KELLOGG_R,
            RegionTag::Plus => 1.0,
        }
    }
    fn source(&self, _region: RegionTag, _z: Point2) -> f64 {
        0.0
    }
    fn exact_u(&self, region: RegionTag, z: Point2) -> f64 {
        let c = self.cross.center;
        let r = z.dist(c);
        if r == 0.0 {
            return 0.0;
        }
        let t = z.angle_about(c);
        let q = self.quadrant(region, t);
        let t = unwrap_near(t, (q as f64 + 0.5) * FRAC_PI_2);
        r.powf(KELLOGG_EPSILON) * kellogg_angular(q, t).0
    }
    fn exact_grad(&self, region: RegionTag, z: Point2) -> Point2 {
        let c = self.cross.center;
        let t = z.angle_about(c);
        let q = self.quadrant(region, t);
        let t = unwrap_near(t, (q as f64 + 0.5) * FRAC_PI_2);
        let (f, df) = kellogg_angular(q, t);
        polar_power_grad(z, c, KELLOGG_EPSILON, f, df)
    }
    fn has_flux_jump(&self) -> bool {
        // the listed constants meet the flux conditions only to about 1e-5
        true
    }
    fn singular_points(&self) -> Vec<Point2> {
        vec![self.cross.center]
    }
    fn witness_minus(&self) -> Point2 {
        Point2::new(0.25, 0.25)
    }
    fn interface_point(&self, s: f64) -> Point2 {
        // four rays from the center, visited in turn
        let c = self.cross.center;
        let k = ((s * 4.0) as usize).min(3);
        let d = 0.5 * (0.02 + 0.96 * (s * 4.0 - k as f64));
        let dir = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][k];
        Point2::new(c.x + d * dir.0, c.y + d * dir.1)
    }
}

// ---------------------------------------------------------------------------

/// `u = sin(pi x) sin(pi y) + x y` with a constant coefficient on both sides
/// of a circle. Nothing jumps, so this is an ordinary smooth problem.
#[derive(Clone, Debug)]
pub struct SmoothProblem {
    pub beta: f64,
    pub circle: Circle,
}

pub fn smooth_problem(beta: f64) -> SmoothProblem {
    SmoothProblem {
        beta,
        circle: Circle {
            center: Point2::new(0.0, 0.0),
            radius: 0.5,
        },
    }
}

impl LevelSetProblem for SmoothProblem {
    fn name(&self) -> String {
        "smooth".into()
    }
    fn domain(&self) -> Rect {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }
    fn level_set(&self) -> &dyn LevelSet {
        &self.circle
    }
    fn beta(&self, _region: RegionTag, _z: Point2) -> f64 {
        self.beta
    }
    fn source(&self, _region: RegionTag, z: Point2) -> f64 {
        self.beta * 2.0 * PI * PI * (PI * z.x).sin() * (PI * z.y).sin()
    }
    fn exact_u(&self, _region: RegionTag, z: Point2) -> f64 {
        (PI * z.x).sin() * (PI * z.y).sin() + z.x * z.y
    }
    fn exact_grad(&self, _region: RegionTag, z: Point2) -> Point2 {
        Point2::new(
            PI * (PI * z.x).cos() * (PI * z.y).sin() + z.y,
            PI * (PI * z.x).sin() * (PI * z.y).cos() + z.x,
        )
    }
    fn flux_jump(&self, _z: Point2) -> f64 {
        0.0
    }
    fn witness_minus(&self) -> Point2 {
        Point2::new(0.0, 0.0)
    }
    fn interface_point(&self, s: f64) -> Point2 {
        let t = 2.0 * PI * s;
        Point2::new(t.cos(), t.sin()) * self.circle.radius
    }
}

/// Globally linear `u = a + b . z` across a straight interface, with the flux
/// jump `(beta+ - beta-) b . n` that this implies.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub a: f64,
    pub b: Point2,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub line: HalfPlane,
}

impl LevelSetProblem for LinearProblem {
    fn name(&self) -> String {
        "linear".into()
    }
    fn domain(&self) -> Rect {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }
    fn level_set(&self) -> &dyn LevelSet {
        &self.line
    }
    fn beta(&self, region: RegionTag, _z: Point2) -> f64 {
        match region {
            RegionTag::Minus => self.beta_minus,
            RegionTag::Plus => self.beta_plus,
        }
    }
    fn source(&self, _region: RegionTag, _z: Point2) -> f64 {
        0.0
    }
    fn exact_u(&self, _region: RegionTag, z: Point2) -> f64 {
        self.a + self.b.dot(z)
    }
    fn exact_grad(&self, _region: RegionTag, _z: Point2) -> Point2 {
        self.b
    }
    fn has_flux_jump(&self) -> bool {
        self.beta_minus != self.beta_plus
    }
    fn witness_minus(&self) -> Point2 {
        self.line.normal * (self.line.offset - 0.1)
    }
    fn interface_point(&self, s: f64) -> Point2 {
        let n = self.line.normal;
        n * self.line.offset + Point2::new(-n.y, n.x) * (1.6 * s - 0.8)
    }
}

// ---------------------------------------------------------------------------

/// Worst observed defects of a problem definition.
#[derive(Clone, Copy, Debug, Default)]
pub struct InvariantReport {
    /// `max |u+ - u-|` over interface samples, for problems without a value jump.
    pub value_jump: f64,
    /// `max |beta+ du+/dn - beta- du-/dn - g|` from the analytic gradients.
    pub flux_jump: f64,
    /// The same defect with normal derivatives from finite differences of `u`,
    /// relative to `max(1, beta |du/dn|)`.
    pub flux_jump_fd: f64,
    /// `max |-div(beta grad u) - f|` by fourth-order differences, relative to
    /// `max(|f|, beta (|u_xx| + |u_yy|), beta max(1, |u|))`.
    pub pde_residual: f64,
    /// `max |grad u - FD grad u| / max(1, |grad u|)` at the interior samples.
    pub gradient: f64,
}

fn fd_grad(u: &dyn Fn(Point2) -> f64, z: Point2, h: f64) -> Point2 {
    Point2::new(
        (u(z + Point2::new(h, 0.0)) - u(z - Point2::new(h, 0.0))) / (2.0 * h),
        (u(z + Point2::new(0.0, h)) - u(z - Point2::new(0.0, h))) / (2.0 * h),
    )
}

/// Fourth-order central difference of `u` at 0.
fn fd4(u: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    (-u(2.0 * h) + 8.0 * u(h) - 8.0 * u(-h) + u(-2.0 * h)) / (12.0 * h)
}

/// Checks continuity (or the declared jump), the flux jump, and the PDE with
/// finite differences at the given interface and interior points. Interior
/// points closer than `2h` to the interface or `0.05` to a singularity are skipped.
pub fn check_invariants(p: &dyn LevelSetProblem, interface: &[Point2], interior: &[Point2]) -> InvariantReport {
    let mut rep = InvariantReport::default();
    let ls = p.level_set();
    for &z in interface {
        if !p.has_value_jump() {
            let j = p.exact_u(RegionTag::Plus, z) - p.exact_u(RegionTag::Minus, z);
            rep.value_jump = rep.value_jump.max(j.abs());
        }
        let n = ls.gradient(z);
        let n = n * (1.0 / n.norm());
        let (bp, bm) = (p.beta(RegionTag::Plus, z), p.beta(RegionTag::Minus, z));
        let g = p.flux_jump(z);
        let analytic = bp * p.exact_grad(RegionTag::Plus, z).dot(n) - bm * p.exact_grad(RegionTag::Minus, z).dot(n);
        rep.flux_jump = rep.flux_jump.max((analytic - g).abs());
        // each branch is differentiated through the interface as a smooth function
        let dn = |region: RegionTag| fd4(&|s: f64| p.exact_u(region, z + n * s), 1e-4);
        let (dp, dm) = (dn(RegionTag::Plus), dn(RegionTag::Minus));
        let scale = (bp * dp).abs().max((bm * dm).abs()).max(1.0);
        rep.flux_jump_fd = rep.flux_jump_fd.max((bp * dp - bm * dm - g).abs() / scale);
    }
    let h = 1e-3;
    for &z in interior {
        let Some(region) = RegionTag::from_phi(ls.value(z)) else {
            continue;
        };
        let near_interface = [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)]
            .iter()
            .any(|&(dx, dy)| RegionTag::from_phi(ls.value(z + Point2::new(2.0 * dx, 2.0 * dy))) != Some(region));
        let near_singularity = p.singular_points().iter().any(|s| s.dist(z) < 0.05);
        if near_interface || near_singularity {
            continue;
        }
        let u = |q: Point2| p.exact_u(region, q);
        // fourth-order second differences along each axis
        let d2 = |e: Point2| {
            (-u(z + e * 2.0) + 16.0 * u(z + e) - 30.0 * u(z) + 16.0 * u(z - e) - u(z - e * 2.0)) / (12.0 * h * h)
        };
        let (uxx, uyy) = (d2(Point2::new(h, 0.0)), d2(Point2::new(0.0, h)));
        let beta = p.beta(region, z);
        let f = p.source(region, z);
        let scale = f.abs().max(beta * (uxx.abs() + uyy.abs())).max(beta * u(z).abs().max(1.0));
        let res = (-beta * (uxx + uyy) - f).abs() / scale;
        rep.pde_residual = rep.pde_residual.max(res);
        let g = p.exact_grad(region, z);
        let gd = fd_grad(&u, z, 1e-6);
        rep.gradient = rep.gradient.max((g - gd).norm() / g.norm().max(1.0));
    }
    rep
}
