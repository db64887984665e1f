//! Quadrature rules on triangles (barycentric) and on line segments.

use crate::geometry::Point2;

/// Rule on a triangle: barycentric points and weights summing to one.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Six-point rule exact for polynomials of degree 4.
    pub fn degree4() -> Self {
        const A: f64 = 0.445_948_490_915_965;
        const WA: f64 = 0.223_381_589_678_011;
        const B: f64 = 0.091_576_213_509_771;
        const WB: f64 = 0.109_951_743_655_322;
        let sym = |a: f64| [[a, a, 1.0 - 2.0 * a], [a, 1.0 - 2.0 * a, a], [1.0 - 2.0 * a, a, a]];
        let mut points = Vec::with_capacity(6);
        points.extend(sym(A));
        points.extend(sym(B));
        TriangleRule {
            points,
            weights: vec![WA, WA, WA, WB, WB, WB],
        }
    }

    /// Composite rule: the degree-4 rule on each of the `4^levels` congruent
    /// subtriangles of a uniform subdivision.
    pub fn subdivided(levels: u32) -> Self {
        let base = TriangleRule::degree4();
        let n = 1usize << levels;
        let h = 1.0 / n as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let scale = 1.0 / (n * n) as f64;
        // sub-triangles of the reference triangle in (l1, l2) coordinates
        for i in 0..n {
            for j in 0..(n - i) {
                let up = [(i, j), (i + 1, j), (i, j + 1)];
                let mut subs = vec![up];
                if i + j + 1 < n {
                    subs.push([(i + 1, j), (i + 1, j + 1), (i, j + 1)]);
                }
                for s in subs {
                    let c: Vec<(f64, f64)> = s.iter().map(|&(a, b)| (a as f64 * h, b as f64 * h)).collect();
                    for (p, w) in base.points.iter().zip(&base.weights) {
                        let l1 = p[0] * c[0].0 + p[1] * c[1].0 + p[2] * c[2].0;
                        let l2 = p[0] * c[0].1 + p[1] * c[1].1 + p[2] * c[2].1;
                        points.push([1.0 - l1 - l2, l1, l2]);
                        weights.push(w * scale);
                    }
                }
            }
        }
        TriangleRule { points, weights }
    }

    /// Physical points of the rule on the triangle `corners`.
    pub fn map(&self, corners: &[Point2; 3]) -> impl Iterator<Item = (Point2, &[f64; 3], f64)> + '_ {
        let c = *corners;
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let p = Point2::new(
                l[0] * c[0].x + l[1] * c[1].x + l[2] * c[2].x,
                l[0] * c[0].y + l[1] * c[1].y + l[2] * c[2].y,
            );
            (p, l, w)
        })
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n > 0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}
