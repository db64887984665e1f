//! Polynomial preserving gradient recovery (PPR) and its immersed variant.
//!
//! At every vertex a quadratic is fitted in the least-squares sense to the
//! nodal values of a layered patch and differentiated at the vertex. The
//! immersed operator fits each side of the interface separately, so a vertex
//! on the discrete interface carries one gradient per region.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::NodalField;
use crate::geometry::{Point2, RegionTag};
use crate::mesh::Mesh;

pub const RANK_TOL: f64 = 1e-9;

/// Layers are added one at a time up to this count before giving up.
const MAX_LAYERS: usize = 64;

/// Least-squares quadratic in the scaled variables `((x, y) - center) / scale`
/// with monomials `1, x, y, x^2, xy, y^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFit {
    pub coefficients: [f64; 6],
    pub scale: f64,
    pub center: Point2,
    /// Smallest singular value of the scaled design matrix.
    pub sigma_min: f64,
}

impl QuadraticFit {
    pub fn value_at(&self, p: Point2) -> f64 {
        let m = monomials((p - self.center) * (1.0 / self.scale));
        m.iter().zip(&self.coefficients).map(|(m, c)| m * c).sum()
    }

    pub fn gradient_at(&self, p: Point2) -> Point2 {
        let q = (p - self.center) * (1.0 / self.scale);
        let c = &self.coefficients;
        Point2::new(c[1] + 2.0 * c[3] * q.x + c[4] * q.y, c[2] + c[4] * q.x + 2.0 * c[5] * q.y) * (1.0 / self.scale)
    }

    /// Gradient at the fitting center.
    pub fn gradient(&self) -> Point2 {
        Point2::new(self.coefficients[1], self.coefficients[2]) * (1.0 / self.scale)
    }
}

pub fn monomials(q: Point2) -> [f64; 6] {
    [1.0, q.x, q.y, q.x * q.x, q.x * q.y, q.y * q.y]
}

pub fn fit_quadratic(samples: &[(Point2, f64)], center: Point2) -> Result<QuadraticFit> {
    fit_quadratic_with(samples, center, RANK_TOL)
}

/// Fits by a singular value decomposition of the scaled design matrix and
/// fails with [`Error::RankDeficient`] when its smallest singular value is
/// below `rank_tol`.
pub fn fit_quadratic_with(samples: &[(Point2, f64)], center: Point2, rank_tol: f64) -> Result<QuadraticFit> {
    if samples.len() < 6 {
        return Err(Error::RankDeficient(0.0));
    }
    let scale = samples.iter().map(|(p, _)| p.dist(center)).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::RankDeficient(0.0));
    }
    let m = samples.len();
    let a = DMatrix::from_fn(m, 6, |i, j| monomials((samples[i].0 - center) * (1.0 / scale))[j]);
    let b = DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let svd = a.svd(true, true);
    let sigma_min = svd.singular_values.min();
    if !(sigma_min >= rank_tol) {
        return Err(Error::RankDeficient(sigma_min));
    }
    let c = svd.solve(&b, 0.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(QuadraticFit {
        coefficients: [c[0], c[1], c[2], c[3], c[4], c[5]],
        scale,
        center,
        sigma_min,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryOptions {
    /// Layer count the patch search starts from.
    pub min_layers: usize,
    pub rank_tol: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            min_layers: 1,
            rank_tol: RANK_TOL,
        }
    }
}

/// Outcome of recovery at one vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecovery {
    pub gradient: Point2,
    /// Sampling nodes of the accepted patch, sorted.
    pub nodes: Vec<usize>,
    pub layers: usize,
}

/// Interior with respect to the (possibly restricted) submesh: not on the
/// domain boundary and surrounded by triangles of the region.
fn is_interior(mesh: &Mesh, v: usize, restrict: Option<RegionTag>) -> bool {
    !mesh.is_boundary_vertex(v)
        && restrict.is_none_or(|r| mesh.vertex_triangles(v).iter().all(|&t| mesh.triangle_region[t] == r))
}

/// Sampling nodes at `n` layers. A vertex on the boundary of the submesh uses
/// the union of the patches of its interior neighbours when it has any.
pub fn sampling_nodes(mesh: &Mesh, z: usize, n: usize, restrict: Option<RegionTag>) -> Vec<usize> {
    if is_interior(mesh, z, restrict) {
        return mesh.layers(z, n, restrict).node_set;
    }
    let mut neighbours: Vec<usize> = mesh
        .vertex_triangles(z)
        .iter()
        .filter(|&&t| restrict.is_none_or(|r| mesh.triangle_region[t] == r))
        .flat_map(|&t| mesh.triangles[t])
        .filter(|&y| y != z && is_interior(mesh, y, restrict))
        .collect();
    neighbours.sort_unstable();
    neighbours.dedup();
    if neighbours.is_empty() {
        return mesh.layers(z, n, restrict).node_set;
    }
    let mut nodes = vec![z];
    for y in neighbours {
        nodes.extend(mesh.layers(y, n, restrict).node_set);
    }
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

pub fn ppr_node(mesh: &Mesh, u: &NodalField, z: usize, restrict: Option<RegionTag>) -> Result<Point2> {
    ppr_node_with(mesh, u, z, restrict, &RecoveryOptions::default()).map(|r| r.gradient)
}

/// Grows the patch from `opts.min_layers` until the fit has full rank.
pub fn ppr_node_with(
    mesh: &Mesh,
    u: &NodalField,
    z: usize,
    restrict: Option<RegionTag>,
    opts: &RecoveryOptions,
) -> Result<NodeRecovery> {
    let center = mesh.vertices[z];
    let mut previous = 0;
    for n in opts.min_layers.max(1)..=MAX_LAYERS {
        let nodes = sampling_nodes(mesh, z, n, restrict);
        if nodes.len() == previous {
            break;
        }
        previous = nodes.len();
        if nodes.len() < 6 {
            continue;
        }
        let samples: Vec<(Point2, f64)> = nodes.iter().map(|&v| (mesh.vertices[v], u.values[v])).collect();
        match fit_quadratic_with(&samples, center, opts.rank_tol) {
            Ok(fit) => {
                return Ok(NodeRecovery {
                    gradient: fit.gradient(),
                    nodes,
                    layers: n,
                })
            }
            Err(Error::RankDeficient(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::PatchExhausted(z))
}

/// One recovered gradient per vertex, interpolated linearly inside triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub values: Vec<Point2>,
}

impl GradientField {
    /// Value at barycentric coordinates `l` of triangle `t`.
    pub fn eval(&self, mesh: &Mesh, t: usize, l: &[f64; 3]) -> Point2 {
        let tri = mesh.triangles[t];
        self.values[tri[0]] * l[0] + self.values[tri[1]] * l[1] + self.values[tri[2]] * l[2]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("ifem-grad v1\n");
        write_block(&mut s, "all", self.values.iter().copied().map(Some));
        s
    }
}

/// Recovered gradients per region. A vertex has an entry in a region's field
/// when it belongs to a triangle of that region.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoValuedGradientField {
    pub minus_field: Vec<Option<Point2>>,
    pub plus_field: Vec<Option<Point2>>,
}

impl TwoValuedGradientField {
    pub fn field(&self, region: RegionTag) -> &[Option<Point2>] {
        match region {
            RegionTag::Minus => &self.minus_field,
            RegionTag::Plus => &self.plus_field,
        }
    }

    pub fn n_two_valued(&self) -> usize {
        self.minus_field
            .iter()
            .zip(&self.plus_field)
            .filter(|(a, b)| a.is_some() && b.is_some())
            .count()
    }

    /// Value inside triangle `t`, taken from the field of its region.
    pub fn eval(&self, mesh: &Mesh, t: usize, l: &[f64; 3]) -> Point2 {
        let field = self.field(mesh.triangle_region[t]);
        let g = mesh.triangles[t].map(|v| field[v].expect("vertex outside the closure of its triangle's region"));
        g[0] * l[0] + g[1] * l[1] + g[2] * l[2]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("ifem-grad v1\n");
        write_block(&mut s, "minus", self.minus_field.iter().copied());
        write_block(&mut s, "plus", self.plus_field.iter().copied());
        s
    }
}

fn write_block(s: &mut String, name: &str, values: impl Iterator<Item = Option<Point2>> + Clone) {
    let count = values.clone().flatten().count();
    let _ = writeln!(s, "{name} {count}");
    for (v, g) in values.enumerate() {
        if let Some(g) = g {
            let _ = writeln!(s, "{v} {:.17e} {:.17e}", g.x, g.y);
        }
    }
}

/// The unrestricted operator `G_h` at every vertex.
pub fn ppr_recover(mesh: &Mesh, u: &NodalField) -> Result<GradientField> {
    ppr_recover_with(mesh, u, &RecoveryOptions::default())
}

pub fn ppr_recover_with(mesh: &Mesh, u: &NodalField, opts: &RecoveryOptions) -> Result<GradientField> {
    let values = (0..mesh.n_vertices())
        .into_par_iter()
        .map(|z| ppr_node_with(mesh, u, z, None, opts).map(|r| r.gradient))
        .collect::<Result<_>>()?;
    Ok(GradientField { values })
}

/// The immersed operator `G_h^I` for a continuous nodal field.
pub fn ippr_recover(mesh: &Mesh, u: &NodalField) -> Result<TwoValuedGradientField> {
    ippr_recover_sides(mesh, u, u, &RecoveryOptions::default())
}

/// The immersed operator with separate nodal values for each side, as needed
/// when the solution jumps across the interface.
pub fn ippr_recover_sides(
    mesh: &Mesh,
    u_minus: &NodalField,
    u_plus: &NodalField,
    opts: &RecoveryOptions,
) -> Result<TwoValuedGradientField> {
    let per_vertex: Vec<[Option<Point2>; 2]> = (0..mesh.n_vertices())
        .into_par_iter()
        .map(|z| {
            let mut out = [None, None];
            let sides = [(RegionTag::Minus, u_minus), (RegionTag::Plus, u_plus)];
            let in_closure = sides.map(|(r, _)| mesh.touches_region(z, r));
            for (k, (region, u)) in sides.into_iter().enumerate() {
                if !in_closure[k] {
                    continue;
                }
                if !in_closure[1 - k] {
                    // far from the interface the unrestricted value is kept
                    let free = ppr_node_with(mesh, u, z, None, opts)?;
                    if !patch_meets_region(mesh, &free.nodes, region.other()) {
                        out[k] = Some(free.gradient);
                        continue;
                    }
                }
                out[k] = Some(ppr_node_with(mesh, u, z, Some(region), opts)?.gradient);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(TwoValuedGradientField {
        minus_field: per_vertex.iter().map(|g| g[0]).collect(),
        plus_field: per_vertex.iter().map(|g| g[1]).collect(),
    })
}

/// Whether some triangle of `region` has all its vertices among `nodes`.
pub fn patch_meets_region(mesh: &Mesh, nodes: &[usize], region: RegionTag) -> bool {
    nodes.iter().any(|&v| {
        mesh.vertex_triangles(v).iter().any(|&t| {
            mesh.triangle_region[t] == region && mesh.triangles[t].iter().all(|w| nodes.binary_search(w).is_ok())
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, Rect};
    use crate::mesh::{build_fitted_mesh, uniform_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle() -> Circle {
        Circle {
            center: Point2::new(0.0, 0.0),
            radius: 0.5,
        }
    }

    fn square() -> Rect {
        Rect::new(-1.0, -1.0, 1.0, 1.0)
    }

    /// Solves the normal equations by Gaussian elimination with partial pivoting.
    fn normal_equations(samples: &[(Point2, f64)], center: Point2, scale: f64) -> [f64; 6] {
        let mut m = [[0.0; 7]; 6];
        for &(p, v) in samples {
            let r = monomials((p - center) * (1.0 / scale));
            for i in 0..6 {
                for j in 0..6 {
                    m[i][j] += r[i] * r[j];
                }
                m[i][6] += r[i] * v;
            }
        }
        for c in 0..6 {
            let piv = (c..6).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            m.swap(c, piv);
            for r in 0..6 {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for k in c..7 {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
        std::array::from_fn(|i| m[i][6] / m[i][i])
    }

    #[test]
    fn quadratic_is_reproduced() {
        let p = |q: Point2| 3.0 + 2.0 * q.x - q.y + q.x * q.x;
        let center = Point2::new(0.3, -0.2);
        let samples: Vec<_> = (0..9)
            .map(|k| {
                let t = k as f64 * 0.7;
                let q = center + Point2::new(t.cos(), t.sin()) * (0.1 + 0.01 * k as f64);
                (q, p(q))
            })
            .collect();
        let fit = fit_quadratic(&samples, center).unwrap();
        let g = fit.gradient();
        assert!((g.x - (2.0 + 2.0 * center.x)).abs() < 1e-12);
        assert!((g.y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_are_rank_deficient() {
        let samples: Vec<_> = (0..6).map(|k| (Point2::new(k as f64, 2.0 * k as f64), 1.0)).collect();
        assert!(matches!(
            fit_quadratic(&samples, Point2::new(0.0, 0.0)),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn fit_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let center = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let samples: Vec<_> = (0..10)
                .map(|_| {
                    let q = center + Point2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
                    (q, rng.random_range(-1.0..1.0))
                })
                .collect();
            let fit = fit_quadratic(&samples, center).unwrap();
            let oracle = normal_equations(&samples, center, fit.scale);
            for (c, o) in fit.coefficients.iter().zip(oracle) {
                assert!((c - o).abs() <= 1e-10 * o.abs().max(1.0), "{c} vs {o}");
            }
        }
    }

    #[test]
    fn interior_quadratic_is_exact() {
        let mesh = uniform_mesh(square(), 8);
        let u = NodalField::from_fn(&mesh, |p| p.x * p.x);
        let g = ppr_recover(&mesh, &u).unwrap();
        for v in 0..mesh.n_vertices() {
            let want = Point2::new(2.0 * mesh.vertices[v].x, 0.0);
            assert!((g.values[v] - want).norm() < 1e-12, "{v}");
        }
    }

    #[test]
    fn linear_fields_recover_exactly_under_any_restriction() {
        let mesh = build_fitted_mesh(&circle(), square(), 16).unwrap();
        let u = NodalField::from_fn(&mesh, |p| 1.0 - 0.5 * p.x + 2.0 * p.y);
        let two = ippr_recover(&mesh, &u).unwrap();
        for region in [RegionTag::Minus, RegionTag::Plus] {
            for g in two.field(region).iter().flatten() {
                assert!((*g - Point2::new(-0.5, 2.0)).norm() < 1e-10);
            }
        }
        let one = ppr_recover(&mesh, &u).unwrap();
        assert!(one.values.iter().all(|g| (*g - Point2::new(-0.5, 2.0)).norm() < 1e-10));
    }

    #[test]
    fn restricted_patches_stay_on_their_side() {
        let c = circle();
        let mesh = build_fitted_mesh(&c, square(), 16).unwrap();
        let u = NodalField::zeros(mesh.n_vertices());
        let z = (0..mesh.n_vertices()).find(|&v| mesh.vertex_class[v].is_interface()).unwrap();
        let rec = ppr_node_with(&mesh, &u, z, Some(RegionTag::Minus), &RecoveryOptions::default()).unwrap();
        use crate::geometry::LevelSet;
        for &v in &rec.nodes {
            assert!(c.value(mesh.vertices[v]) <= 1e-12, "{v}");
        }
    }

    #[test]
    fn two_valued_structure() {
        let mesh = build_fitted_mesh(&circle(), square(), 16).unwrap();
        let u = NodalField::from_fn(&mesh, |p| p.x.sin() * p.y);
        let g = ippr_recover(&mesh, &u).unwrap();
        assert_eq!(g.n_two_valued(), mesh.n_interface_vertices());
        for v in 0..mesh.n_vertices() {
            assert!(g.minus_field[v].is_some() || g.plus_field[v].is_some());
        }
    }

    #[test]
    fn smooth_fields_agree_across_the_interface() {
        let mesh = build_fitted_mesh(&circle(), square(), 32).unwrap();
        let u = NodalField::from_fn(&mesh, |p| (p.x + 0.3 * p.y).sin());
        let g = ippr_recover(&mesh, &u).unwrap();
        for v in 0..mesh.n_vertices() {
            if let (Some(a), Some(b)) = (g.minus_field[v], g.plus_field[v]) {
                // both one-sided fits are second order accurate
                assert!((a - b).norm() < 0.05, "{v}: {a} {b}");
            }
        }
    }

    #[test]
    fn far_vertices_match_unrestricted_recovery() {
        let mesh = build_fitted_mesh(&circle(), square(), 16).unwrap();
        let u = NodalField::from_fn(&mesh, |p| (3.0 * p.x).cos() + p.y * p.y * p.x);
        let two = ippr_recover(&mesh, &u).unwrap();
        let one = ppr_recover(&mesh, &u).unwrap();
        let mut far = 0;
        for v in 0..mesh.n_vertices() {
            let free = ppr_node_with(&mesh, &u, v, None, &RecoveryOptions::default()).unwrap();
            for region in [RegionTag::Minus, RegionTag::Plus] {
                if mesh.touches_region(v, region)
                    && !mesh.touches_region(v, region.other())
                    && !patch_meets_region(&mesh, &free.nodes, region.other())
                {
                    far += 1;
                    assert_eq!(two.field(region)[v].unwrap(), one.values[v]);
                }
            }
        }
        assert!(far > mesh.n_vertices() / 2);
    }

    #[test]
    fn recovery_is_linear() {
        let mesh = build_fitted_mesh(&circle(), square(), 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut field = || NodalField {
            values: (0..mesh.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let (u, w) = (field(), field());
        let (a, b) = (0.7, -2.3);
        let comb = NodalField {
            values: u.values.iter().zip(&w.values).map(|(x, y)| a * x + b * y).collect(),
        };
        let (gu, gw, gc) = (
            ippr_recover(&mesh, &u).unwrap(),
            ippr_recover(&mesh, &w).unwrap(),
            ippr_recover(&mesh, &comb).unwrap(),
        );
        for region in [RegionTag::Minus, RegionTag::Plus] {
            for v in 0..mesh.n_vertices() {
                if let Some(c) = gc.field(region)[v] {
                    let e = gu.field(region)[v].unwrap() * a + gw.field(region)[v].unwrap() * b;
                    assert!((c - e).norm() <= 1e-12 * c.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn dump_has_one_block_per_region() {
        let mesh = build_fitted_mesh(&circle(), square(), 8).unwrap();
        let u = NodalField::from_fn(&mesh, |p| p.x);
        let text = ippr_recover(&mesh, &u).unwrap().to_text();
        assert!(text.starts_with("ifem-grad v1\nminus "));
        assert!(text.contains("\nplus "));
    }
}
