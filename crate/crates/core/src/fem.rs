//! Linear finite elements for the interface problem.
//!
//! The discrete problem finds `u_h` with `(beta_h grad u_h, grad v) = (f, v) - <g, v>`
//! on the discrete interface, for all `v` vanishing on the boundary. When the
//! solution itself jumps across the interface, `u_h = w + q_h` on plus
//! triangles and `u_h = w` on minus triangles, where `q_h` interpolates the
//! value jump and `w` is continuous; the system is solved for `w`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{project_to_interface, Point2, RegionTag};
use crate::mesh::Mesh;
use crate::problems::LevelSetProblem;
use crate::quadrature::{gauss_legendre, TriangleRule};
use crate::sparse::{pcg, CgStats, CsrMatrix};

/// One value per mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(n: usize) -> Self {
        NodalField { values: vec![0.0; n] }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point2) -> f64) -> Self {
        NodalField {
            values: mesh.vertices.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Gradients of the three barycentric coordinates and the area of the triangle.
pub fn barycentric_gradients(c: &[Point2; 3]) -> ([Point2; 3], f64) {
    let area2 = (c[1] - c[0]).cross(c[2] - c[0]);
    let inv = 1.0 / area2;
    let grad = |k: usize| {
        let e = c[(k + 2) % 3] - c[(k + 1) % 3];
        Point2::new(-e.y * inv, e.x * inv)
    };
    ([grad(0), grad(1), grad(2)], 0.5 * area2)
}

/// Constant gradient of the linear function with vertex values `u` on `c`.
pub fn linear_gradient(c: &[Point2; 3], u: [f64; 3]) -> Point2 {
    let (g, _) = barycentric_gradients(c);
    g[0] * u[0] + g[1] * u[1] + g[2] * u[2]
}

/// `beta * (grad l_i . grad l_j) * |T|` for the barycentric basis `l`.
pub fn local_stiffness(c: &[Point2; 3], beta: f64) -> Result<[[f64; 3]; 3]> {
    let h = c[0].dist(c[1]).max(c[1].dist(c[2])).max(c[2].dist(c[0]));
    let area = 0.5 * (c[1] - c[0]).cross(c[2] - c[0]);
    if !(area > 1e-14 * h * h) {
        return Err(Error::DegenerateTriangle([0, 1, 2]));
    }
    let (g, area) = barycentric_gradients(c);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = beta * g[i].dot(g[j]) * area;
        }
    }
    Ok(k)
}

/// Assembled system with the boundary rows and columns eliminated.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet_mask: Vec<bool>,
    /// Boundary values of the unknown; zero at free vertices.
    pub dirichlet_values: Vec<f64>,
    /// Interpolant of the value jump, applied on plus triangles only.
    pub lift: NodalField,
}

/// Interpolant of `u+ - u-` at vertices of plus triangles; zero when the
/// problem has no value jump.
pub fn value_jump_lift(mesh: &Mesh, problem: &dyn LevelSetProblem) -> NodalField {
    let mut lift = NodalField::zeros(mesh.n_vertices());
    if problem.has_value_jump() {
        for v in 0..mesh.n_vertices() {
            if mesh.touches_region(v, RegionTag::Plus) {
                lift.values[v] = problem.value_jump(mesh.vertices[v]);
            }
        }
    }
    lift
}

fn sparsity(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut rows: Vec<Vec<usize>> = (0..mesh.n_vertices()).map(|v| vec![v]).collect();
    for e in mesh.edges() {
        rows[e.v[0]].push(e.v[1]);
        rows[e.v[1]].push(e.v[0]);
    }
    rows
}

/// Local stiffness and load of one triangle.
struct ElementContribution {
    k: [[f64; 3]; 3],
    load: [f64; 3],
}

fn element(mesh: &Mesh, problem: &dyn LevelSetProblem, rule: &TriangleRule, t: usize) -> Result<ElementContribution> {
    let c = mesh.corners(t);
    let region = mesh.triangle_region[t];
    let beta = problem.beta(region, mesh.centroid(t));
    let k = local_stiffness(&c, beta).map_err(|_| Error::DegenerateTriangle(mesh.triangles[t]))?;
    let area = mesh.area(t);
    let mut load = [0.0; 3];
    for (p, l, w) in rule.map(&c) {
        let f = problem.source(region, p);
        for i in 0..3 {
            load[i] += w * area * f * l[i];
        }
    }
    Ok(ElementContribution { k, load })
}

/// Quadrature used by [`assemble_with`].
#[derive(Clone, Debug)]
pub struct AssemblyOptions {
    pub volume_rule: TriangleRule,
    /// Gauss points per interface edge.
    pub line_points: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            volume_rule: TriangleRule::degree4(),
            line_points: 2,
        }
    }
}

/// Assembles stiffness matrix and load vector, applies the interface flux
/// term and the value-jump lifting, and eliminates boundary values taken from
/// the exact solution.
pub fn assemble(mesh: &Mesh, problem: &dyn LevelSetProblem) -> Result<SparseSystem> {
    assemble_with(mesh, problem, &AssemblyOptions::default())
}

pub fn assemble_with(mesh: &Mesh, problem: &dyn LevelSetProblem, opts: &AssemblyOptions) -> Result<SparseSystem> {
    let nv = mesh.n_vertices();
    let rule = &opts.volume_rule;
    let contributions: Vec<ElementContribution> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| element(mesh, problem, rule, t))
        .collect::<Result<_>>()?;

    let lift = value_jump_lift(mesh, problem);
    let mut matrix = CsrMatrix::with_pattern(&sparsity(mesh));
    let mut rhs = vec![0.0; nv];
    for (t, ec) in contributions.iter().enumerate() {
        let tri = mesh.triangles[t];
        let lifted = mesh.triangle_region[t] == RegionTag::Plus && problem.has_value_jump();
        for i in 0..3 {
            rhs[tri[i]] += ec.load[i];
            for j in 0..3 {
                matrix.add(tri[i], tri[j], ec.k[i][j]);
                if lifted {
                    rhs[tri[i]] -= ec.k[i][j] * lift.values[tri[j]];
                }
            }
        }
    }

    if problem.has_flux_jump() {
        let ls = problem.level_set();
        let gauss = gauss_legendre(opts.line_points);
        let edges: Vec<[usize; 2]> = mesh.interface_edges().map(|e| e.v).collect();
        let flux: Vec<[f64; 2]> = edges
            .par_iter()
            .map(|&[a, b]| {
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                let len = pa.dist(pb);
                let mut out = [0.0; 2];
                for &(s, w) in &gauss {
                    let g = problem.flux_jump(project_to_interface(ls, pa + (pb - pa) * s)?);
                    out[0] += w * len * g * (1.0 - s);
                    out[1] += w * len * g * s;
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for ([a, b], f) in edges.iter().zip(flux) {
            rhs[*a] -= f[0];
            rhs[*b] -= f[1];
        }
    }

    let mut dirichlet_mask = vec![false; nv];
    let mut dirichlet_values = vec![0.0; nv];
    for v in 0..nv {
        if !mesh.is_boundary_vertex(v) {
            continue;
        }
        let p = mesh.vertices[v];
        dirichlet_mask[v] = true;
        dirichlet_values[v] = if mesh.touches_region(v, RegionTag::Minus) {
            problem.exact_u(RegionTag::Minus, p)
        } else {
            problem.exact_u(RegionTag::Plus, p) - lift.values[v]
        };
    }
    if let Some(v) = (0..nv).find(|&v| !rhs[v].is_finite() || !dirichlet_values[v].is_finite()) {
        return Err(Error::InvalidInput(format!(
            "problem data is not finite near vertex {v} at {}",
            mesh.vertices[v]
        )));
    }

    // symmetric elimination of the boundary unknowns
    for i in 0..nv {
        let range = matrix.row_ptr[i]..matrix.row_ptr[i + 1];
        if dirichlet_mask[i] {
            for k in range {
                matrix.values[k] = if matrix.col_idx[k] == i { 1.0 } else { 0.0 };
            }
            rhs[i] = dirichlet_values[i];
        } else {
            for k in range {
                let j = matrix.col_idx[k];
                if dirichlet_mask[j] {
                    rhs[i] -= matrix.values[k] * dirichlet_values[j];
                    matrix.values[k] = 0.0;
                }
            }
        }
    }
    Ok(SparseSystem {
        matrix,
        rhs,
        dirichlet_mask,
        dirichlet_values,
        lift,
    })
}

/// Solves the system by Jacobi-preconditioned conjugate gradients from the
/// boundary values, or from `guess` at the free vertices when given.
pub fn solve_with_guess(sys: &SparseSystem, tol: f64, guess: Option<&NodalField>) -> Result<(NodalField, CgStats)> {
    let mut x = sys.dirichlet_values.clone();
    if let Some(g) = guess {
        for (i, xi) in x.iter_mut().enumerate() {
            if !sys.dirichlet_mask[i] {
                *xi = g.values[i];
            }
        }
    }
    let stats = pcg(&sys.matrix, &sys.rhs, &mut x, tol)?;
    Ok((NodalField { values: x }, stats))
}

pub fn solve(sys: &SparseSystem, tol: f64) -> Result<NodalField> {
    solve_with_guess(sys, tol, None).map(|(u, _)| u)
}

/// Relative residual `||A u - b|| / ||b||`.
pub fn relative_residual(sys: &SparseSystem, u: &NodalField) -> f64 {
    let mut r = vec![0.0; sys.rhs.len()];
    sys.matrix.mul_vec(&u.values, &mut r);
    let num: f64 = r.iter().zip(&sys.rhs).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = sys.rhs.iter().map(|b| b * b).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Discrete solution: the continuous part `w` and the lifting `q_h` that is
/// added on plus triangles.
#[derive(Clone, Debug)]
pub struct FemSolution {
    pub w: NodalField,
    pub lift: NodalField,
    pub stats: CgStats,
    pub residual: f64,
}

impl FemSolution {
    /// Vertex values of `u_h` restricted to triangle `t`.
    pub fn local_values(&self, mesh: &Mesh, t: usize) -> [f64; 3] {
        let tri = mesh.triangles[t];
        let lifted = mesh.triangle_region[t] == RegionTag::Plus;
        tri.map(|v| self.w.values[v] + if lifted { self.lift.values[v] } else { 0.0 })
    }

    /// Gradient of `u_h` on triangle `t`.
    pub fn element_gradient(&self, mesh: &Mesh, t: usize) -> Point2 {
        linear_gradient(&mesh.corners(t), self.local_values(mesh, t))
    }

    /// Nodal values of `u_h` seen from `region`.
    pub fn side_values(&self, region: RegionTag) -> NodalField {
        match region {
            RegionTag::Minus => self.w.clone(),
            RegionTag::Plus => NodalField {
                values: self.w.values.iter().zip(&self.lift.values).map(|(w, q)| w + q).collect(),
            },
        }
    }

    /// Values for a plot: the plus-side value where a vertex touches a plus triangle.
    pub fn display_values(&self, mesh: &Mesh) -> NodalField {
        NodalField {
            values: (0..mesh.n_vertices())
                .map(|v| {
                    let q = if mesh.touches_region(v, RegionTag::Plus) { self.lift.values[v] } else { 0.0 };
                    self.w.values[v] + q
                })
                .collect(),
        }
    }
}

/// Assembles and solves; `guess` warm-starts the iteration.
pub fn solve_problem(
    mesh: &Mesh,
    problem: &dyn LevelSetProblem,
    tol: f64,
    guess: Option<&NodalField>,
) -> Result<FemSolution> {
    let sys = assemble(mesh, problem)?;
    let (w, stats) = solve_with_guess(&sys, tol, guess)?;
    let residual = relative_residual(&sys, &w);
    Ok(FemSolution {
        w,
        lift: sys.lift,
        stats,
        residual,
    })
}
