//! Dörfler marking and the solve, estimate, mark, refine loop.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::error_norms::{
    energy_error, h1_error, ppr_error, recovered_energy_error, recovered_error, supercloseness_error, ErrorRecord,
};
use crate::estimator::{effective_index, indicators, IndicatorField};
use crate::fem::{solve_problem, FemSolution};
use crate::geometry::RegionTag;
use crate::mesh::{bisect, Mesh};
use crate::problems::LevelSetProblem;
use crate::recovery::{ippr_recover_sides, ppr_recover_with, RecoveryOptions, TwoValuedGradientField};

/// Which sum the bulk parameter applies to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Marking {
    pub theta: f64,
    /// `true`: mark until `sum eta_T^2 >= theta * eta^2`.
    /// `false`: mark until `sum eta_T^2 >= theta^2 * eta^2`.
    pub bulk_on_squares: bool,
}

impl Marking {
    pub fn new(theta: f64) -> Marking {
        Marking {
            theta,
            bulk_on_squares: true,
        }
    }

    pub fn bulk_fraction(&self) -> f64 {
        if self.bulk_on_squares {
            self.theta
        } else {
            self.theta * self.theta
        }
    }
}

/// Bulk to reach, lowered by a relative `1e-12` so that rounding in the sums
/// does not add a triangle to an exactly balanced prefix.
pub fn bulk_target(fraction: f64, eta_global: f64) -> f64 {
    fraction * eta_global * eta_global * (1.0 - 1e-12)
}

/// Smallest prefix of the triangles sorted by decreasing indicator (ties by
/// index) that carries the bulk fraction of `eta_global^2`.
pub fn dorfler_mark(eta: &IndicatorField, marking: &Marking) -> Result<BTreeSet<usize>> {
    if !(marking.theta > 0.0 && marking.theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta must lie in (0, 1), got {}", marking.theta)));
    }
    let mut order: Vec<usize> = (0..eta.eta.len()).collect();
    order.sort_by(|&a, &b| eta.eta[b].total_cmp(&eta.eta[a]).then(a.cmp(&b)));
    let target = bulk_target(marking.bulk_fraction(), eta.eta_global);
    let mut marked = BTreeSet::new();
    let mut bulk = 0.0;
    for t in order {
        if bulk >= target && !marked.is_empty() {
            break;
        }
        bulk += eta.eta[t] * eta.eta[t];
        marked.insert(t);
    }
    Ok(marked)
}

#[derive(Clone, Debug)]
pub struct AdaptOptions {
    pub marking: Marking,
    /// The loop stops once the vertex count exceeds this.
    pub max_dof: usize,
    pub cg_tol: f64,
    pub recovery: RecoveryOptions,
    /// Run the mesh consistency checks after every refinement.
    pub check_meshes: bool,
    /// Upper bound on the number of iterations.
    pub max_iterations: usize,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        AdaptOptions {
            marking: Marking::new(0.2),
            max_dof: 50_000,
            cg_tol: 1e-10,
            recovery: RecoveryOptions::default(),
            check_meshes: false,
            max_iterations: 1000,
        }
    }
}

/// Everything computed on one mesh of the loop.
#[derive(Clone, Debug)]
pub struct AdaptStep {
    pub iteration: usize,
    pub mesh: Mesh,
    pub solution: FemSolution,
    pub gradient: TwoValuedGradientField,
    pub indicators: IndicatorField,
    pub record: ErrorRecord,
}

/// Solves, recovers and measures on a fixed mesh.
pub fn analyse(
    mesh: Mesh,
    problem: &dyn LevelSetProblem,
    iteration: usize,
    opts: &AdaptOptions,
) -> Result<AdaptStep> {
    let solution = solve_problem(&mesh, problem, opts.cg_tol, None)?;
    let gradient = ippr_recover_sides(
        &mesh,
        &solution.side_values(RegionTag::Minus),
        &solution.side_values(RegionTag::Plus),
        &opts.recovery,
    )?;
    let eta = indicators(&mesh, &solution, &gradient, problem);
    let energy = energy_error(&mesh, &solution, problem);
    let dpe = ppr_error(&mesh, &ppr_recover_with(&mesh, &solution.w, &opts.recovery)?, problem);
    let record = ErrorRecord {
        dof: mesh.n_vertices(),
        de: h1_error(&mesh, &solution, problem),
        die: supercloseness_error(&mesh, &solution, problem),
        dre: recovered_error(&mesh, &gradient, problem),
        dpe,
        energy_error: energy,
        recovered_energy: recovered_energy_error(&mesh, &gradient, problem),
        eta_global: eta.eta_global,
        kappa: effective_index(eta.eta_global, energy)?,
    };
    Ok(AdaptStep {
        iteration,
        mesh,
        solution,
        gradient,
        indicators: eta,
        record,
    })
}

/// Runs the loop and hands every step to `observe`; returns the last step.
pub fn adaptive_loop_with(
    problem: &dyn LevelSetProblem,
    initial_mesh: Mesh,
    opts: &AdaptOptions,
    mut observe: impl FnMut(&AdaptStep) -> Result<()>,
) -> Result<AdaptStep> {
    let mut mesh = initial_mesh;
    for iteration in 0.. {
        let step = analyse(mesh, problem, iteration, opts)?;
        observe(&step)?;
        if step.mesh.n_vertices() > opts.max_dof || iteration + 1 >= opts.max_iterations {
            return Ok(step);
        }
        let marked = dorfler_mark(&step.indicators, &opts.marking)?;
        let next = bisect(&step.mesh, &marked, problem.level_set())?;
        if opts.check_meshes {
            next.check_invariants(problem.level_set())
                .map_err(|m| Error::InvalidInput(format!("mesh check failed after refinement {iteration}: {m}")))?;
        }
        if next.n_vertices() <= step.mesh.n_vertices() {
            return Err(Error::InvalidInput(format!("refinement {iteration} added no vertices")));
        }
        mesh = next;
    }
    unreachable!()
}

/// Runs the loop and keeps every step.
pub fn adaptive_loop(problem: &dyn LevelSetProblem, initial_mesh: Mesh, opts: &AdaptOptions) -> Result<Vec<AdaptStep>> {
    let mut steps = Vec::new();
    let last = adaptive_loop_with(problem, initial_mesh, opts, |s| {
        steps.push(s.clone());
        Ok(())
    })?;
    drop(last);
    Ok(steps)
}
