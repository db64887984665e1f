//! Plain-text mesh format.
//!
//! ```text
//! ifem-mesh v1
//! <vertex count>
//! x y class        (one line per vertex)
//! <triangle count>
//! i j k region     (one line per triangle)
//! ```
//!
//! Coordinates are written in shortest round-trip form, so reading a written
//! mesh reproduces it exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect, RegionTag};

use super::{Mesh, VertexClass};

pub const MESH_HEADER: &str = "ifem-mesh v1";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::with_capacity(32 * (mesh.n_vertices() + mesh.n_triangles()));
    let _ = writeln!(out, "{MESH_HEADER}");
    let _ = writeln!(out, "{}", mesh.n_vertices());
    for (p, c) in mesh.vertices.iter().zip(&mesh.vertex_class) {
        let _ = writeln!(out, "{:?} {:?} {}", p.x, p.y, c.as_str());
    }
    let _ = writeln!(out, "{}", mesh.n_triangles());
    for (t, r) in mesh.triangles.iter().zip(&mesh.triangle_region) {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], r.as_str());
    }
    out
}

/// Parses the text format. The domain is taken as the bounding box of the vertices.
pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut next = |what: &str| lines.next().ok_or_else(|| err(0, &format!("missing {what}")));

    let (ln, header) = next("header")?;
    if header != MESH_HEADER {
        return Err(err(ln, "bad header"));
    }
    let (ln, count) = next("vertex count")?;
    let nv: usize = count.parse().map_err(|_| err(ln, "bad vertex count"))?;
    let mut vertices = Vec::with_capacity(nv);
    let mut classes = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(ln, "expected `x y class`"));
        }
        let x: f64 = f[0].parse().map_err(|_| err(ln, "bad x"))?;
        let y: f64 = f[1].parse().map_err(|_| err(ln, "bad y"))?;
        let class = match f[2] {
            "interior" => VertexClass::Interior,
            "boundary" => VertexClass::Boundary,
            "interface" => VertexClass::OnInterface,
            "boundary_interface" => VertexClass::BoundaryAndInterface,
            _ => return Err(err(ln, "bad vertex class")),
        };
        vertices.push(Point2::new(x, y));
        classes.push(class);
    }
    let (ln, count) = next("triangle count")?;
    let nt: usize = count.parse().map_err(|_| err(ln, "bad triangle count"))?;
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("triangle")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(err(ln, "expected `i j k region`"));
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = f[k].parse().map_err(|_| err(ln, "bad vertex index"))?;
            if tri[k] >= nv {
                return Err(err(ln, "vertex index out of range"));
            }
        }
        let region = match f[3] {
            "minus" => RegionTag::Minus,
            "plus" => RegionTag::Plus,
            _ => return Err(err(ln, "bad region")),
        };
        triangles.push(tri);
        regions.push(region);
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &vertices {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    Ok(Mesh::from_parts(
        Rect::new(x0, y0, x1, y1),
        vertices,
        triangles,
        regions,
        classes,
        vec![0; nt],
    ))
}
