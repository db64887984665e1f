use std::collections::{BTreeSet, HashMap};

use crate::error::Result;
use crate::geometry::{project_to_interface, LevelSet, Point2, RegionTag};

use super::{Mesh, VertexClass};

/// Newest-vertex bisection of the `marked` triangles with conforming closure.
///
/// Midpoints of interface edges (edges between a `Minus` and a `Plus`
/// triangle) are projected back onto the interface. Children inherit the region of their parent.
pub fn bisect(mesh: &Mesh, marked: &BTreeSet<usize>, ls: &dyn LevelSet) -> Result<Mesh> {
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let edge_index: HashMap<(usize, usize), usize> = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| ((e.v[0], e.v[1]), i))
        .collect();
    // local edge k is opposite local vertex k; edge 0 is the refinement edge
    let tri_edges: Vec<[usize; 3]> = mesh
        .triangles
        .iter()
        .map(|&[a, b, c]| [edge_index[&key(b, c)], edge_index[&key(c, a)], edge_index[&key(a, b)]])
        .collect();

    // closure: a triangle with any marked edge must also split its refinement edge
    let mut split = vec![false; mesh.edges().len()];
    let mut queue: Vec<usize> = Vec::new();
    let mark_edge = |e: usize, split: &mut Vec<bool>, queue: &mut Vec<usize>| {
        if !split[e] {
            split[e] = true;
            queue.extend_from_slice(mesh.edges()[e].triangles());
        }
    };
    for &t in marked {
        mark_edge(tri_edges[t][0], &mut split, &mut queue);
    }
    while let Some(t) = queue.pop() {
        let [base, e1, e2] = tri_edges[t];
        if !split[base] && (split[e1] || split[e2]) {
            mark_edge(base, &mut split, &mut queue);
        }
    }

    let (vertices, vertex_class, midpoint) = split_edges(mesh, &split, ls)?;
    let cut: HashMap<(usize, usize), usize> = mesh
        .edges()
        .iter()
        .zip(&midpoint)
        .filter(|(_, &m)| m != usize::MAX)
        .map(|(e, &m)| ((e.v[0], e.v[1]), m))
        .collect();

    let mut triangles = Vec::with_capacity(mesh.n_triangles() + 2 * cut.len());
    let mut regions = Vec::with_capacity(triangles.capacity());
    let mut generation = Vec::with_capacity(triangles.capacity());
    let mut stack = Vec::new();
    for t in 0..mesh.n_triangles() {
        if !split[tri_edges[t][0]] {
            triangles.push(mesh.triangles[t]);
            regions.push(mesh.triangle_region[t]);
            generation.push(mesh.generation[t]);
            continue;
        }
        stack.push((mesh.triangles[t], mesh.generation[t]));
        while let Some((tri, gen)) = stack.pop() {
            let [a, b, c] = tri;
            match cut.get(&key(b, c)) {
                Some(&m) => {
                    // pushed in reverse so the (m, a, b) child is emitted first
                    stack.push(([m, c, a], gen + 1));
                    stack.push(([m, a, b], gen + 1));
                }
                None => {
                    triangles.push(tri);
                    regions.push(mesh.triangle_region[t]);
                    generation.push(gen);
                }
            }
        }
    }
    Ok(Mesh::from_parts(mesh.domain, vertices, triangles, regions, vertex_class, generation))
}

/// Adds the midpoints of the `split` edges, projecting those that lie on the
/// interface. Returns the new vertex list, classes and the midpoint of each
/// edge (`usize::MAX` for edges that are kept).
fn split_edges(mesh: &Mesh, split: &[bool], ls: &dyn LevelSet) -> Result<(Vec<Point2>, Vec<VertexClass>, Vec<usize>)> {
    let mut vertices = mesh.vertices.clone();
    let mut vertex_class = mesh.vertex_class.clone();
    let mut midpoint = vec![usize::MAX; split.len()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if !split[e] {
            continue;
        }
        let [a, b] = edge.v;
        let mut p = vertices[a].midpoint(vertices[b]);
        let separates = edge.n_tris == 2 && mesh.triangle_region[edge.tris[0]] != mesh.triangle_region[edge.tris[1]];
        let mut on_interface = separates && vertex_class[a].is_interface() && vertex_class[b].is_interface();
        if !on_interface {
            // a straight edge next to a curved interface can dip across it
            let side = RegionTag::from_phi(ls.value(p));
            on_interface = edge.triangles().iter().any(|&t| side != Some(mesh.triangle_region[t]));
        }
        if on_interface {
            p = project_to_interface(ls, p)?;
        }
        let boundary = mesh.on_domain_boundary(p);
        midpoint[e] = vertices.len();
        vertices.push(p);
        vertex_class.push(VertexClass::from_flags(boundary, on_interface));
    }
    Ok((vertices, vertex_class, midpoint))
}

/// Splits every triangle into four through its edge midpoints.
///
/// Each child is similar to its parent apart from the interface midpoints,
/// which are projected as in [`bisect`]. Children count two generations.
pub fn red_refine(mesh: &Mesh, ls: &dyn LevelSet) -> Result<Mesh> {
    let (vertices, vertex_class, midpoint) = split_edges(mesh, &vec![true; mesh.edges().len()], ls)?;
    let mid: HashMap<(usize, usize), usize> = mesh
        .edges()
        .iter()
        .zip(&midpoint)
        .map(|(e, &m)| ((e.v[0], e.v[1]), m))
        .collect();
    let m = |a: usize, b: usize| mid[&(a.min(b), a.max(b))];
    let nt = 4 * mesh.n_triangles();
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    let mut generation = Vec::with_capacity(nt);
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
        triangles.extend([[ca, a, ab], [ab, b, bc], [bc, c, ca], [bc, ca, ab]]);
        regions.extend([mesh.triangle_region[t]; 4]);
        generation.extend([mesh.generation[t] + 2; 4]);
    }
    let mut refined = Mesh::from_parts(mesh.domain, vertices, triangles, regions, vertex_class, generation);
    smooth_near_interface(&mut refined, mesh.n_vertices(), SMOOTHING_SWEEPS);
    Ok(refined)
}

const SMOOTHING_SWEEPS: usize = 3;

/// Laplacian smoothing of the new vertices `first..` that share a triangle
/// with an interface vertex. Interface and boundary vertices stay put, and a
/// move is kept only if it raises the smallest angle around the vertex.
fn smooth_near_interface(mesh: &mut Mesh, first: usize, sweeps: usize) {
    let movable: Vec<usize> = (first..mesh.n_vertices())
        .filter(|&v| {
            let c = mesh.vertex_class[v];
            !c.is_interface()
                && !c.is_boundary()
                && mesh
                    .vertex_triangles(v)
                    .iter()
                    .any(|&t| mesh.triangles[t].iter().any(|&w| mesh.vertex_class[w].is_interface()))
        })
        .collect();
    for _ in 0..sweeps {
        for &v in &movable {
            let tris = mesh.vertex_triangles(v).to_vec();
            let mut sum = Point2::new(0.0, 0.0);
            let mut count = 0.0;
            for &t in &tris {
                for &w in &mesh.triangles[t] {
                    if w != v {
                        sum = sum + mesh.vertices[w];
                        count += 1.0;
                    }
                }
            }
            let worst = |m: &Mesh| {
                tris.iter()
                    .map(|&t| if m.signed_area(t) > 0.0 { m.min_angle_deg(t) } else { -1.0 })
                    .fold(f64::INFINITY, f64::min)
            };
            let old = mesh.vertices[v];
            let before = worst(mesh);
            mesh.vertices[v] = sum * (1.0 / count);
            if worst(mesh) <= before {
                mesh.vertices[v] = old;
            }
        }
    }
}
