use crate::error::{Error, Result};
use crate::geometry::{project_to_interface, LevelSet, Point2, Rect, RegionTag, PROJ_TOL};

use super::{Mesh, VertexClass};

/// Uniform right-triangle mesh of `rect` with `n` cells per side.
///
/// Each cell is split along its south-west/north-east diagonal. The right-angle
/// vertex is stored first so the hypotenuse is the refinement edge. Every
/// triangle is tagged `Plus` and no vertex is marked as interface.
pub fn uniform_mesh(rect: Rect, n: usize) -> Mesh {
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            let x = if i == n { rect.x1 } else { rect.x0 + rect.width() * (i as f64 / n as f64) };
            let y = if j == n { rect.y1 } else { rect.y0 + rect.height() * (j as f64 / n as f64) };
            vertices.push(Point2::new(x, y));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * np + i;
            let b = a + 1;
            let c = b + np;
            let d = a + np;
            triangles.push([b, c, a]);
            triangles.push([d, a, c]);
        }
    }
    let nt = triangles.len();
    let mut mesh = Mesh::from_parts(
        rect,
        vertices,
        triangles,
        vec![RegionTag::Plus; nt],
        vec![VertexClass::Interior; np * np],
        vec![0; nt],
    );
    for v in 0..mesh.n_vertices() {
        let b = mesh.on_domain_boundary(mesh.vertices[v]);
        mesh.vertex_class[v] = VertexClass::from_flags(b, false);
    }
    mesh
}

/// Builds a body-fitted mesh by snapping vertices of a uniform background mesh
/// onto the interface.
///
/// Every background edge whose end points lie strictly on opposite sides of the
/// interface is cut at parameter `t`. Edges are visited with the cut closest to
/// an end point first, and the end point nearer to the cut is moved to the cut
/// point, which is then polished onto the interface by
/// [`project_to_interface`]. When the nearer end may not move, or moving it
/// leaves an angle under 15 degrees where moving the other end would not, the
/// other end is moved instead. A vertex may not move if it lies on the domain boundary, if
/// the move would invert a triangle, or if a triangle would end up with three
/// interface vertices. The exception is a cut on a boundary edge: there a
/// non-corner end point slides along its side of the domain.
///
/// Vertices that lie exactly on the interface from the start are left alone,
/// so grid-aligned interfaces can produce all-interface triangles.
pub fn build_fitted_mesh(ls: &dyn LevelSet, domain: Rect, n_per_side: usize) -> Result<Mesh> {
    if n_per_side < 4 {
        return Err(Error::InvalidInput(format!("n_per_side = {n_per_side} < 4")));
    }
    let mut mesh = uniform_mesh(domain, n_per_side);
    let nv = mesh.n_vertices();
    let mut phi: Vec<f64> = mesh.vertices.iter().map(|&p| ls.value(p)).collect();
    let mut on_interface: Vec<bool> = phi.iter().map(|f| f.abs() <= PROJ_TOL).collect();
    let boundary: Vec<bool> = (0..nv).map(|v| mesh.vertex_class[v].is_boundary()).collect();
    let corner: Vec<bool> = mesh
        .vertices
        .iter()
        .map(|p| (p.x == domain.x0 || p.x == domain.x1) && (p.y == domain.y0 || p.y == domain.y1))
        .collect();

    // cut edges, closest cut to an end point first
    let mut cuts: Vec<(usize, f64)> = mesh
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| !on_interface[e.v[0]] && !on_interface[e.v[1]] && phi[e.v[0]].signum() != phi[e.v[1]].signum())
        .map(|(i, e)| (i, cut_parameter(ls, mesh.vertices[e.v[0]], mesh.vertices[e.v[1]])))
        .collect();
    cuts.sort_by(|x, y| x.1.min(1.0 - x.1).total_cmp(&y.1.min(1.0 - y.1)));

    for (e, t) in cuts {
        let [a, b] = mesh.edges()[e].v;
        if on_interface[a] || on_interface[b] {
            continue;
        }
        let cut = mesh.vertices[a] + (mesh.vertices[b] - mesh.vertices[a]) * t;
        // a cut on a boundary edge stays on that side; elsewhere it is polished
        let along_boundary = mesh.edges()[e].is_boundary();
        let target = if along_boundary || ls.value(cut).abs() <= PROJ_TOL {
            cut
        } else {
            project_to_interface(ls, cut)?
        };
        if along_boundary && ls.value(target).abs() > PROJ_TOL {
            return Err(Error::UnresolvedInterface(format!("cut of boundary edge {a}-{b} is inexact")));
        }
        let (near, far) = if t <= 0.5 { (a, b) } else { (b, a) };
        // smallest angle around `v` after the move, or None if the move is not allowed
        let quality = |v: usize| -> Option<f64> {
            if boundary[v] && !(along_boundary && !corner[v]) {
                return None;
            }
            let mut worst = f64::INFINITY;
            for &s in mesh.vertex_triangles(v) {
                let tri = mesh.triangles[s];
                // no triangle may end up with three interface vertices
                if tri.iter().all(|&w| w == v || on_interface[w]) {
                    return None;
                }
                let c = tri.map(|w| if w == v { target } else { mesh.vertices[w] });
                if !((c[1] - c[0]).cross(c[2] - c[0]) > 0.0) {
                    return None;
                }
                worst = worst.min(min_angle_deg(&c));
            }
            Some(worst)
        };
        let snap = match (quality(near), quality(far)) {
            (Some(qn), Some(qf)) if qn < GOOD_ANGLE_DEG && qf > qn => far,
            (Some(_), _) => near,
            (None, Some(_)) => far,
            (None, None) => {
                return Err(Error::UnresolvedInterface(format!(
                    "edge {a}-{b} cannot be snapped without degenerating a triangle"
                )))
            }
        };
        mesh.vertices[snap] = target;
        phi[snap] = ls.value(target);
        on_interface[snap] = true;
    }

    for t in 0..mesh.n_triangles() {
        if !(mesh.signed_area(t) > 0.0) {
            return Err(Error::UnresolvedInterface(format!("snapping inverted triangle {t}")));
        }
    }
    mesh.rebuild_topology();
    classify(mesh, ls)
}

/// Angle (degrees) below which the far end point is tried instead of the near one.
const GOOD_ANGLE_DEG: f64 = 15.0;

fn min_angle_deg(c: &[Point2; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let u = c[(k + 1) % 3] - c[k];
            let w = c[(k + 2) % 3] - c[k];
            u.cross(w).abs().atan2(u.dot(w)).to_degrees()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cut point of the segment `a -> b` with the interface, as a parameter in `[0, 1]`.
fn cut_parameter(ls: &dyn LevelSet, a: Point2, b: Point2) -> f64 {
    let fa = ls.value(a);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = ls.value(a + (b - a) * mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Assigns vertex classes from `|phi|` and boundary membership, and triangle
/// regions from the sign of `phi` at their non-interface vertices (at the
/// centroid when all three vertices are on the interface).
pub fn classify(mut mesh: Mesh, ls: &dyn LevelSet) -> Result<Mesh> {
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertices[v];
        mesh.vertex_class[v] = VertexClass::from_flags(mesh.on_domain_boundary(p), ls.value(p).abs() <= PROJ_TOL);
    }
    for t in 0..mesh.n_triangles() {
        let mut region = None;
        for &v in &mesh.triangles[t] {
            if mesh.vertex_class[v].is_interface() {
                continue;
            }
            let r = RegionTag::from_phi(ls.value(mesh.vertices[v]));
            match (region, r) {
                (None, r) => region = r,
                (Some(a), Some(b)) if a != b => return Err(Error::AmbiguousElement(t)),
                _ => {}
            }
        }
        let region = match region {
            Some(r) => r,
            None => RegionTag::from_phi(ls.value(mesh.centroid(t))).unwrap_or(RegionTag::Plus),
        };
        mesh.triangle_region[t] = region;
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, CrossLines, HalfPlane, QuadrantCorner};

    fn circle() -> Circle {
        Circle {
            center: Point2::new(0.0, 0.0),
            radius: 0.5,
        }
    }

    #[test]
    fn uniform_mesh_counts() {
        let m = uniform_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 4);
        assert_eq!(m.n_triangles(), 32);
        assert_eq!(m.n_vertices(), 25);
        assert!((0..32).all(|t| m.signed_area(t) > 0.0));
        let m = uniform_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 8);
        assert_eq!(m.n_triangles(), 128);
    }

    #[test]
    fn circle_mesh_is_fitted() {
        let ls = circle();
        let m = build_fitted_mesh(&ls, Rect::new(-1.0, -1.0, 1.0, 1.0), 16).unwrap();
        m.check_invariants(&ls).unwrap();
        assert!(m.triangle_region.contains(&RegionTag::Minus));
        assert!(m.min_angle() > 10.0, "min angle {}", m.min_angle());
    }

    /// Counts grid edges crossing the circle by direct sign evaluation on the
    /// unperturbed grid; every crossing contributes one snapped vertex unless
    /// two crossings share the snapped end point.
    #[test]
    fn snapped_vertices_match_grid_crossings() {
        let ls = circle();
        let rect = Rect::new(-1.0, -1.0, 1.0, 1.0);
        let n = 16;
        let bg = uniform_mesh(rect, n);
        let crossings: Vec<[usize; 2]> = bg
            .edges()
            .iter()
            .filter(|e| {
                let (a, b) = (ls.value(bg.vertices[e.v[0]]), ls.value(bg.vertices[e.v[1]]));
                a * b < 0.0
            })
            .map(|e| e.v)
            .collect();
        let m = build_fitted_mesh(&ls, rect, n).unwrap();
        let moved: Vec<usize> = (0..m.n_vertices())
            .filter(|&v| m.vertices[v] != bg.vertices[v])
            .collect();
        // grid vertices lying exactly on the circle are interface vertices that never move
        let exact = (0..bg.n_vertices())
            .filter(|&v| ls.value(bg.vertices[v]) == 0.0)
            .count();
        assert_eq!(exact, 4);
        assert_eq!(moved.len() + exact, m.n_interface_vertices());
        // every snapped vertex is an end of some crossing edge
        for &v in &moved {
            assert!(crossings.iter().any(|e| e.contains(&v)));
        }
        // and every crossing edge got at least one end on the interface
        for e in &crossings {
            assert!(e.iter().any(|v| m.vertex_class[*v].is_interface()));
        }
        assert!(moved.len() <= crossings.len());
    }

    #[test]
    fn aligned_interfaces_move_nothing() {
        let rect = Rect::new(-1.0, -1.0, 1.0, 1.0);
        let bg = uniform_mesh(rect, 8);
        let lines: [&dyn LevelSet; 2] = [
            &HalfPlane {
                normal: Point2::new(1.0, 0.0),
                offset: 0.0,
            },
            &HalfPlane {
                normal: Point2::new(0.0, 1.0),
                offset: 0.0,
            },
        ];
        for ls in lines {
            let m = build_fitted_mesh(ls, rect, 8).unwrap();
            assert_eq!(m.vertices, bg.vertices);
            assert_eq!(m.n_interface_vertices(), 9);
            m.check_invariants(ls).unwrap();
        }
        let unit = Rect::new(0.0, 0.0, 1.0, 1.0);
        let q = QuadrantCorner {
            corner: unit.center(),
        };
        let m = build_fitted_mesh(&q, unit, 4).unwrap();
        assert_eq!(m.n_interface_vertices(), 5);
        assert_eq!(m.triangle_region.iter().filter(|r| **r == RegionTag::Minus).count(), 8);
        m.check_invariants(&q).unwrap();
        let c = CrossLines {
            center: unit.center(),
        };
        let m = build_fitted_mesh(&c, unit, 8).unwrap();
        assert_eq!(m.n_interface_vertices(), 17);
        assert_eq!(m.triangle_region.iter().filter(|r| **r == RegionTag::Minus).count(), 64);
        m.check_invariants(&c).unwrap();
    }

    #[test]
    fn classify_examples() {
        // single triangles with prescribed phi values at the vertices
        struct Table(Vec<(Point2, f64)>);
        impl LevelSet for Table {
            fn value(&self, z: Point2) -> f64 {
                self.0.iter().find(|(p, _)| *p == z).map(|(_, f)| *f).unwrap_or(-1.0)
            }
            fn gradient(&self, _: Point2) -> Point2 {
                Point2::new(1.0, 0.0)
            }
        }
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let one = |vals: [f64; 3]| {
            let ls = Table(pts.iter().copied().zip(vals).collect());
            let m = Mesh::from_parts(
                Rect::new(-1.0, -1.0, 2.0, 2.0),
                pts.to_vec(),
                vec![[0, 1, 2]],
                vec![RegionTag::Plus],
                vec![VertexClass::Interior; 3],
                vec![0],
            );
            classify(m, &ls).map(|m| m.triangle_region[0])
        };
        assert_eq!(one([-0.1, -0.2, 0.0]), Ok(RegionTag::Minus));
        assert_eq!(one([0.0, 0.0, 0.3]), Ok(RegionTag::Plus));
        assert_eq!(one([-0.1, 0.2, 0.0]), Err(Error::AmbiguousElement(0)));
    }

    #[test]
    fn all_interface_triangle_uses_centroid() {
        let ls = circle();
        let r = 0.5;
        let pts: Vec<Point2> = [0.0f64, 0.3, 0.6]
            .iter()
            .map(|a| Point2::new(r * a.cos(), r * a.sin()))
            .collect();
        let m = Mesh::from_parts(
            Rect::new(-1.0, -1.0, 1.0, 1.0),
            pts,
            vec![[0, 1, 2]],
            vec![RegionTag::Plus],
            vec![VertexClass::Interior; 3],
            vec![0],
        );
        let m = classify(m, &ls).unwrap();
        assert!(m.vertex_class.iter().all(|c| c.is_interface()));
        // the centroid of a chord triangle lies inside the circle
        assert!(ls.value(m.centroid(0)) < 0.0);
        assert_eq!(m.triangle_region[0], RegionTag::Minus);
    }

    #[test]
    fn too_coarse_is_rejected() {
        assert!(matches!(
            build_fitted_mesh(&circle(), Rect::new(-1.0, -1.0, 1.0, 1.0), 3),
            Err(Error::InvalidInput(_))
        ));
    }
}
