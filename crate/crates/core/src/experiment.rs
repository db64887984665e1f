//! Drivers for the uniform and adaptive numerical experiments.

use std::time::Instant;

use crate::adapt::{adaptive_loop_with, analyse, AdaptOptions, AdaptStep};
use crate::error::{Error, Result};
use crate::error_norms::{loglog_slope, ErrorRecord};
use crate::geometry::{LevelSet, Point2};
use crate::mesh::{build_fitted_mesh, red_refine, Mesh};
use crate::problems::{example_51, example_52, example_53, example_54, smooth_problem, LevelSetProblem};

/// Which built-in problem to run and with which coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub beta_minus: Option<f64>,
    pub beta_plus: Option<f64>,
    pub swap_branches: bool,
}

impl ProblemSpec {
    pub fn new(name: &str) -> ProblemSpec {
        ProblemSpec {
            name: name.to_string(),
            beta_minus: None,
            beta_plus: None,
            swap_branches: false,
        }
    }

    pub fn build(&self) -> Result<Box<dyn LevelSetProblem>> {
        let check = |b: f64| {
            if b > 0.0 && b.is_finite() {
                Ok(b)
            } else {
                Err(Error::InvalidInput(format!("coefficients must be positive, got {b}")))
            }
        };
        let bm = check(self.beta_minus.unwrap_or(1.0))?;
        Ok(match self.name.as_str() {
            "ex51" => Box::new(example_51(bm, check(self.beta_plus.unwrap_or(10.0))?)),
            "ex52" => {
                let mut p = example_52();
                p.swap_branches = self.swap_branches;
                Box::new(p)
            }
            "ex53" => Box::new(example_53(check(self.beta_minus.unwrap_or(10000.0))?)),
            "ex54" => Box::new(example_54()),
            "smoke" => Box::new(smooth_problem(bm)),
            other => return Err(Error::InvalidInput(format!("unknown problem '{other}'"))),
        })
    }

    /// Whether the problem is run with adaptive refinement.
    pub fn is_adaptive(&self) -> bool {
        matches!(self.name.as_str(), "ex53" | "ex54")
    }

    /// Mesh family of uniform runs.
    pub fn mesh_family(&self) -> MeshFamily {
        match self.name.as_str() {
            "ex51" => MeshFamily::Refined,
            _ => MeshFamily::Snapped,
        }
    }

    /// Number of levels of a uniform run.
    pub fn default_levels(&self) -> usize {
        match self.name.as_str() {
            "ex51" => 5,
            "ex52" => 6,
            _ => 3,
        }
    }

    /// Vertex count at which an adaptive run stops.
    pub fn default_max_dof(&self) -> usize {
        match self.name.as_str() {
            "ex54" => 100_000,
            _ => 50_000,
        }
    }

    /// Background grid size of the first mesh.
    pub fn initial_n(&self) -> usize {
        match self.name.as_str() {
            "ex51" => 10,
            "ex52" => 16,
            "ex53" => 4,
            "ex54" => 8,
            _ => 8,
        }
    }
}

/// How the meshes of a uniform run are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    /// A new fitted mesh with twice as many cells per side at every level.
    Snapped,
    /// The first fitted mesh, refined by halving every edge at each level.
    Refined,
}

impl MeshFamily {
    pub fn parse(s: &str) -> Result<MeshFamily> {
        match s {
            "snapped" => Ok(MeshFamily::Snapped),
            "refined" => Ok(MeshFamily::Refined),
            _ => Err(Error::InvalidInput(format!("unknown mesh family '{s}'"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeshFamily::Snapped => "snapped",
            MeshFamily::Refined => "refined",
        }
    }
}

#[derive(Clone, Debug)]
pub struct UniformConfig {
    pub n0: usize,
    pub levels: usize,
    pub family: MeshFamily,
    pub analysis: AdaptOptions,
}

impl UniformConfig {
    pub fn for_problem(spec: &ProblemSpec) -> UniformConfig {
        UniformConfig {
            n0: spec.initial_n(),
            levels: spec.default_levels(),
            family: spec.mesh_family(),
            analysis: AdaptOptions::default(),
        }
    }
}

/// Splits every triangle into four through its edge midpoints.
pub fn refine_uniformly(mesh: &Mesh, ls: &dyn LevelSet) -> Result<Mesh> {
    red_refine(mesh, ls)
}

/// Per-level facts besides the error record.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelInfo {
    pub n_per_side: usize,
    pub n_triangles: usize,
    pub min_angle: f64,
    pub cg_iterations: usize,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct UniformRun {
    pub records: Vec<ErrorRecord>,
    pub levels: Vec<LevelInfo>,
    pub last: AdaptStep,
}

/// Solves on `levels` meshes whose size halves from level to level, starting
/// from the fitted mesh with `n0` cells per side.
pub fn run_uniform(problem: &dyn LevelSetProblem, cfg: &UniformConfig) -> Result<UniformRun> {
    if cfg.levels < 1 {
        return Err(Error::InvalidInput("at least one level is needed".into()));
    }
    let mut records = Vec::new();
    let mut levels = Vec::new();
    let mut last: Option<AdaptStep> = None;
    for k in 0..cfg.levels {
        let start = Instant::now();
        let n = cfg.n0 << k;
        let mesh = match (cfg.family, &last) {
            (MeshFamily::Refined, Some(prev)) => refine_uniformly(&prev.mesh, problem.level_set())?,
            _ => build_fitted_mesh(problem.level_set(), problem.domain(), n)?,
        };
        let step = analyse(mesh, problem, k, &cfg.analysis)?;
        levels.push(LevelInfo {
            n_per_side: n,
            n_triangles: step.mesh.n_triangles(),
            min_angle: step.mesh.min_angle(),
            cg_iterations: step.solution.stats.iterations,
            residual: step.solution.residual,
            seconds: start.elapsed().as_secs_f64(),
        });
        records.push(step.record);
        last = Some(step);
    }
    Ok(UniformRun {
        records,
        levels,
        last: last.expect("at least one level"),
    })
}

/// Mesh statistics recorded at every adaptive iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshStats {
    pub n_triangles: usize,
    pub min_angle: f64,
    pub min_diameter: f64,
    pub max_diameter: f64,
    /// Fraction of triangles whose centroid lies within `near_radius` of the
    /// first singular point; zero without singular points.
    pub near_fraction: f64,
    /// Residual of the linear solve.
    pub residual: f64,
}

pub fn mesh_stats(mesh: &Mesh, center: Option<Point2>, near_radius: f64) -> MeshStats {
    let diam: Vec<f64> = (0..mesh.n_triangles()).map(|t| mesh.diameter(t)).collect();
    let near = center.map_or(0, |c| {
        (0..mesh.n_triangles())
            .filter(|&t| mesh.centroid(t).dist(c) < near_radius)
            .count()
    });
    MeshStats {
        n_triangles: mesh.n_triangles(),
        min_angle: mesh.min_angle(),
        min_diameter: diam.iter().copied().fold(f64::INFINITY, f64::min),
        max_diameter: diam.iter().copied().fold(0.0, f64::max),
        near_fraction: near as f64 / mesh.n_triangles() as f64,
        residual: 0.0,
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveConfig {
    pub n0: usize,
    pub options: AdaptOptions,
    pub near_radius: f64,
}

impl AdaptiveConfig {
    pub fn for_problem(spec: &ProblemSpec) -> AdaptiveConfig {
        AdaptiveConfig {
            n0: spec.initial_n(),
            options: AdaptOptions {
                max_dof: spec.default_max_dof(),
                ..AdaptOptions::default()
            },
            near_radius: 0.05,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveRun {
    pub records: Vec<ErrorRecord>,
    pub stats: Vec<MeshStats>,
    pub last: AdaptStep,
}

impl AdaptiveRun {
    /// Slope of `log e` against `log N` over the final half of the iterations.
    pub fn final_half_slope(&self, column: impl Fn(&ErrorRecord) -> f64) -> f64 {
        let k = self.records.len() / 2;
        let tail = &self.records[k..];
        let dofs: Vec<usize> = tail.iter().map(|r| r.dof).collect();
        let errs: Vec<f64> = tail.iter().map(column).collect();
        loglog_slope(&dofs, &errs)
    }
}

pub fn run_adaptive(problem: &dyn LevelSetProblem, cfg: &AdaptiveConfig) -> Result<AdaptiveRun> {
    let mesh = build_fitted_mesh(problem.level_set(), problem.domain(), cfg.n0)?;
    let center = problem.singular_points().first().copied();
    let mut records = Vec::new();
    let mut stats = Vec::new();
    let last = adaptive_loop_with(problem, mesh, &cfg.options, |step| {
        records.push(step.record);
        let mut s = mesh_stats(&step.mesh, center, cfg.near_radius);
        s.residual = step.solution.residual;
        stats.push(s);
        Ok(())
    })?;
    Ok(AdaptiveRun { records, stats, last })
}
