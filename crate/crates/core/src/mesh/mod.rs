//! Body-fitted triangulations.
//!
//! Triangles are stored counterclockwise. Local vertex 0 of every triangle is
//! its newest vertex and the opposite edge `(1, 2)` is its refinement edge;
//! newest-vertex bisection in [`bisect`] relies on this labelling.

mod bisect;
mod build;
pub mod io;

use std::collections::HashMap;

use crate::geometry::{LevelSet, Point2, Rect, RegionTag, PROJ_TOL};

pub use bisect::{bisect, red_refine};
pub use build::{build_fitted_mesh, classify, uniform_mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexClass {
    Interior,
    Boundary,
    OnInterface,
    BoundaryAndInterface,
}

impl VertexClass {
    pub fn from_flags(on_boundary: bool, on_interface: bool) -> Self {
        match (on_boundary, on_interface) {
            (false, false) => VertexClass::Interior,
            (true, false) => VertexClass::Boundary,
            (false, true) => VertexClass::OnInterface,
            (true, true) => VertexClass::BoundaryAndInterface,
        }
    }

    pub fn is_boundary(self) -> bool {
        matches!(self, VertexClass::Boundary | VertexClass::BoundaryAndInterface)
    }

    pub fn is_interface(self) -> bool {
        matches!(self, VertexClass::OnInterface | VertexClass::BoundaryAndInterface)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VertexClass::Interior => "interior",
            VertexClass::Boundary => "boundary",
            VertexClass::OnInterface => "interface",
            VertexClass::BoundaryAndInterface => "boundary_interface",
        }
    }
}

/// Unique mesh edge, `v[0] < v[1]`, with one or two adjacent triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub v: [usize; 2],
    pub tris: [usize; 2],
    pub n_tris: u8,
}

impl Edge {
    pub fn triangles(&self) -> &[usize] {
        &self.tris[..self.n_tris as usize]
    }

    pub fn is_boundary(&self) -> bool {
        self.n_tris == 1
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub domain: Rect,
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub triangle_region: Vec<RegionTag>,
    pub vertex_class: Vec<VertexClass>,
    /// Number of bisections that produced each triangle from the initial mesh.
    pub generation: Vec<u32>,
    edges: Vec<Edge>,
    vertex_tris: Vec<Vec<usize>>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Mesh) -> bool {
        self.domain == other.domain
            && self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.triangle_region == other.triangle_region
            && self.vertex_class == other.vertex_class
            && self.generation == other.generation
    }
}

impl Mesh {
    /// Assembles a mesh from raw parts and builds its edge table.
    pub fn from_parts(
        domain: Rect,
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        triangle_region: Vec<RegionTag>,
        vertex_class: Vec<VertexClass>,
        generation: Vec<u32>,
    ) -> Mesh {
        assert_eq!(triangles.len(), triangle_region.len());
        assert_eq!(triangles.len(), generation.len());
        assert_eq!(vertices.len(), vertex_class.len());
        let mut mesh = Mesh {
            domain,
            vertices,
            triangles,
            triangle_region,
            vertex_class,
            generation,
            edges: Vec::new(),
            vertex_tris: Vec::new(),
        };
        mesh.rebuild_topology();
        mesh
    }

    pub(crate) fn rebuild_topology(&mut self) {
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(self.triangles.len() * 3 / 2 + 8);
        let mut vertex_tris = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[v].push(t);
            }
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                match index.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if (edge.n_tris as usize) < 2 {
                            edge.tris[edge.n_tris as usize] = t;
                        }
                        edge.n_tris = edge.n_tris.saturating_add(1);
                    }
                    None => {
                        index.insert(key, edges.len());
                        edges.push(Edge {
                            v: [key.0, key.1],
                            tris: [t, usize::MAX],
                            n_tris: 1,
                        });
                    }
                }
            }
        }
        self.edges = edges;
        self.vertex_tris = vertex_tris;
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Triangles incident to vertex `v`, in increasing index order.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_tris[v]
    }

    pub fn corners(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area, positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.corners(t);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Longest edge length.
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    /// Smallest interior angle in degrees.
    pub fn min_angle_deg(&self, t: usize) -> f64 {
        let p = self.corners(t);
        (0..3)
            .map(|k| {
                let u = p[(k + 1) % 3] - p[k];
                let w = p[(k + 2) % 3] - p[k];
                u.cross(w).abs().atan2(u.dot(w)).to_degrees()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Refinement edge of triangle `t` as a vertex pair.
    pub fn refinement_edge(&self, t: usize) -> (usize, usize) {
        let tri = self.triangles[t];
        (tri[1], tri[2])
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_class[v].is_boundary()
    }

    /// Whether `v` lies on the domain boundary geometrically.
    pub fn on_domain_boundary(&self, p: Point2) -> bool {
        let d = &self.domain;
        p.x == d.x0 || p.x == d.x1 || p.y == d.y0 || p.y == d.y1
    }

    /// Edges of the discrete interface: those shared by a minus and a plus triangle.
    pub fn interface_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| {
            e.n_tris == 2 && self.triangle_region[e.tris[0]] != self.triangle_region[e.tris[1]]
        })
    }

    /// Whether vertex `v` belongs to at least one triangle of `region`.
    pub fn touches_region(&self, v: usize, region: RegionTag) -> bool {
        self.vertex_tris[v]
            .iter()
            .any(|&t| self.triangle_region[t] == region)
    }

    /// Number of vertices that belong to triangles of both regions.
    pub fn n_two_sided_vertices(&self) -> usize {
        (0..self.n_vertices())
            .filter(|&v| self.touches_region(v, RegionTag::Minus) && self.touches_region(v, RegionTag::Plus))
            .count()
    }

    pub fn n_interface_vertices(&self) -> usize {
        self.vertex_class.iter().filter(|c| c.is_interface()).count()
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| self.min_angle_deg(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// The vertex sets of `L(z, n)`: the union of triangles reached in `n`
    /// layers around `z`. With `restrict` set, only triangles of that region
    /// are collected.
    pub fn layers(&self, z: usize, n: usize, restrict: Option<RegionTag>) -> Patch {
        // patches hold a few dozen vertices, so linear membership tests are cheap
        let mut tri_seen: Vec<usize> = Vec::new();
        let mut nodes = vec![z];
        let mut frontier = vec![z];
        for _ in 0..n {
            let mut next = Vec::new();
            for &v in &frontier {
                for &t in &self.vertex_tris[v] {
                    if restrict.is_some_and(|r| self.triangle_region[t] != r) || tri_seen.contains(&t) {
                        continue;
                    }
                    tri_seen.push(t);
                    for &w in &self.triangles[t] {
                        if !nodes.contains(&w) {
                            nodes.push(w);
                            next.push(w);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        nodes.sort_unstable();
        Patch {
            center: z,
            node_set: nodes,
            layer_count: n,
        }
    }

    /// Checks conformity, orientation, fittedness, interface placement, the
    /// structure of the discrete interface and the Euler characteristic.
    pub fn check_invariants(&self, ls: &dyn LevelSet) -> Result<(), String> {
        // conformity
        for e in &self.edges {
            match e.n_tris {
                2 => {}
                1 => {
                    let (a, b) = (self.vertices[e.v[0]], self.vertices[e.v[1]]);
                    let d = &self.domain;
                    let on_side = (a.x == d.x0 && b.x == d.x0)
                        || (a.x == d.x1 && b.x == d.x1)
                        || (a.y == d.y0 && b.y == d.y0)
                        || (a.y == d.y1 && b.y == d.y1);
                    if !on_side {
                        return Err(format!("edge {:?} has one triangle but is not on the boundary", e.v));
                    }
                }
                k => return Err(format!("edge {:?} is shared by {k} triangles", e.v)),
            }
        }
        for t in 0..self.n_triangles() {
            if !(self.signed_area(t) > 0.0) {
                return Err(format!("triangle {t} is not counterclockwise"));
            }
            let region = self.triangle_region[t];
            for &v in &self.triangles[t] {
                if self.vertex_class[v].is_interface() {
                    continue;
                }
                if RegionTag::from_phi(ls.value(self.vertices[v])) != Some(region) {
                    return Err(format!("vertex {v} of triangle {t} lies outside region {region:?}"));
                }
            }
        }
        for (v, c) in self.vertex_class.iter().enumerate() {
            let p = self.vertices[v];
            if c.is_interface() && ls.value(p).abs() > PROJ_TOL {
                return Err(format!("interface vertex {v} has |phi| = {:e}", ls.value(p).abs()));
            }
            if c.is_boundary() != self.on_domain_boundary(p) {
                return Err(format!("vertex {v} boundary flag is wrong"));
            }
        }
        // discrete interface: closed or ending on the boundary
        let mut degree = vec![0usize; self.n_vertices()];
        for e in self.interface_edges() {
            for &v in &e.v {
                if !self.vertex_class[v].is_interface() {
                    return Err(format!("interface edge {:?} has a non-interface end", e.v));
                }
                degree[v] += 1;
            }
        }
        for (v, &d) in degree.iter().enumerate() {
            if d % 2 == 1 && !self.vertex_class[v].is_boundary() {
                return Err(format!("discrete interface has a loose end at vertex {v}"));
            }
        }
        let euler = self.n_vertices() as i64 - self.edges.len() as i64 + self.n_triangles() as i64;
        if euler != 1 {
            return Err(format!("Euler characteristic {euler} != 1"));
        }
        Ok(())
    }
}

/// Vertex set of a layered patch `L(center, layer_count)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub center: usize,
    /// Sorted vertex indices, including `center`.
    pub node_set: Vec<usize>,
    pub layer_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HalfPlane;

    fn plane() -> HalfPlane {
        HalfPlane {
            normal: Point2::new(1.0, 0.0),
            offset: 0.0,
        }
    }

    #[test]
    fn layers_of_uniform_mesh() {
        let mesh = uniform_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 4);
        let z = 2 * 5 + 2; // center vertex (0.5, 0.5)
        assert_eq!(mesh.layers(z, 0, None).node_set, vec![z]);
        let p1 = mesh.layers(z, 1, None);
        assert_eq!(p1.node_set.len(), 7);
        // hand enumeration: the six neighbours of (2,2) for "/" diagonals
        let expect: Vec<usize> = {
            let mut v: Vec<usize> = [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3), (1, 1), (3, 3)]
                .iter()
                .map(|&(i, j)| j * 5 + i)
                .collect();
            v.sort();
            v
        };
        assert_eq!(p1.node_set, expect);
        assert_eq!(mesh.layers(z, 2, None).node_set.len(), 19);
    }

    #[test]
    fn restricted_layers_stay_in_region() {
        let ls = plane();
        let mesh = build_fitted_mesh(&ls, Rect::new(-1.0, -1.0, 1.0, 1.0), 8).unwrap();
        let z = mesh
            .vertex_class
            .iter()
            .position(|c| *c == VertexClass::OnInterface)
            .unwrap();
        let patch = mesh.layers(z, 2, Some(RegionTag::Minus));
        for &v in &patch.node_set {
            assert!(ls.value(mesh.vertices[v]) <= PROJ_TOL);
        }
        assert!(patch.node_set.contains(&z));
    }

    #[test]
    fn euler_and_invariants_hold_on_uniform_mesh() {
        let ls = plane();
        let mesh = build_fitted_mesh(&ls, Rect::new(-1.0, -1.0, 1.0, 1.0), 6).unwrap();
        mesh.check_invariants(&ls).unwrap();
        assert_eq!(mesh.edges().iter().filter(|e| e.is_boundary()).count(), 24);
    }
}
