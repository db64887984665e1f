//! Run settings, assembled from a `key=value` file, `--set` overrides and
//! command-line flags, applied in that order.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use ifem_core::experiment::{AdaptiveConfig, MeshFamily, ProblemSpec, UniformConfig};
use ifem_core::recovery::RecoveryOptions;
use ifem_core::AdaptOptions;

pub const PROBLEMS: [&str; 5] = ["ex51", "ex52", "ex53", "ex54", "smoke"];

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub spec: ProblemSpec,
    pub levels: Option<usize>,
    pub family: Option<MeshFamily>,
    pub n0: Option<usize>,
    pub theta: f64,
    pub bulk_on_squares: bool,
    pub max_dof: Option<usize>,
    pub max_iterations: usize,
    pub cg_tol: f64,
    pub min_layers: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub dump_mesh: bool,
    pub dump_gradient: bool,
    pub plots: bool,
}

impl Settings {
    pub fn new(problem: &str) -> Result<Settings> {
        if !PROBLEMS.contains(&problem) {
            bail!("unknown problem '{problem}' (expected one of {})", PROBLEMS.join(", "));
        }
        let adapt = AdaptOptions::default();
        Ok(Settings {
            spec: ProblemSpec::new(problem),
            levels: None,
            family: None,
            n0: None,
            theta: adapt.marking.theta,
            bulk_on_squares: adapt.marking.bulk_on_squares,
            max_dof: None,
            max_iterations: adapt.max_iterations,
            cg_tol: adapt.cg_tol,
            min_layers: RecoveryOptions::default().min_layers,
            out: PathBuf::from("out"),
            seed: 0,
            dump_mesh: false,
            dump_gradient: false,
            plots: true,
        })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "problem" => {
                if value != self.spec.name {
                    bail!("config names problem '{value}' but '{}' was requested", self.spec.name);
                }
            }
            "beta_minus" => self.spec.beta_minus = Some(number(value)?),
            "beta_plus" => self.spec.beta_plus = Some(number(value)?),
            "ex52.swap_branches" => self.spec.swap_branches = boolean(value)?,
            "levels" => self.levels = Some(count(value)?),
            "mesh.family" => self.family = Some(MeshFamily::parse(value)?),
            "mesh.n0" => self.n0 = Some(count(value)?),
            "theta" => {
                let t = number(value)?;
                if !(t > 0.0 && t <= 1.0) {
                    bail!("theta must lie in (0, 1], got {t}");
                }
                self.theta = t;
            }
            "marking.bulk_on_squares" => self.bulk_on_squares = boolean(value)?,
            "max_dof" => self.max_dof = Some(count(value)?),
            "max_iterations" => self.max_iterations = count(value)?,
            "cg_tol" => {
                let t = number(value)?;
                if !(t > 0.0 && t < 1.0) {
                    bail!("cg_tol must lie in (0, 1), got {t}");
                }
                self.cg_tol = t;
            }
            "recovery.min_layers" => self.min_layers = count(value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = value.parse().with_context(|| format!("'{value}' is not a seed"))?,
            "dump_mesh" => self.dump_mesh = boolean(value)?,
            "dump_gradient" => self.dump_gradient = boolean(value)?,
            "plots" => self.plots = boolean(value)?,
            other => bail!("unknown setting '{other}'"),
        }
        Ok(())
    }

    /// Applies a `KEY=VALUE` pair.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected KEY=VALUE, got '{pair}'"))?;
        self.set(k, v)
    }

    /// Applies a config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line).with_context(|| format!("config line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn adapt_options(&self) -> AdaptOptions {
        let mut o = AdaptOptions::default();
        o.marking.theta = self.theta;
        o.marking.bulk_on_squares = self.bulk_on_squares;
        o.cg_tol = self.cg_tol;
        o.max_iterations = self.max_iterations;
        o.recovery.min_layers = self.min_layers;
        o.max_dof = self.max_dof.unwrap_or_else(|| self.spec.default_max_dof());
        o
    }

    pub fn uniform_config(&self) -> Result<UniformConfig> {
        let mut c = UniformConfig::for_problem(&self.spec);
        if let Some(l) = self.levels {
            if l < 2 {
                bail!("a uniform run needs at least 2 levels, got {l}");
            }
            c.levels = l;
        }
        c.family = self.family.unwrap_or(c.family);
        c.n0 = self.n0.unwrap_or(c.n0);
        c.analysis = self.adapt_options();
        Ok(c)
    }

    pub fn adaptive_config(&self) -> AdaptiveConfig {
        let mut c = AdaptiveConfig::for_problem(&self.spec);
        c.n0 = self.n0.unwrap_or(c.n0);
        c.options = self.adapt_options();
        c
    }

    /// The effective settings as a config file that reproduces the run.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("default".to_string(), |b| b.to_string());
        let _ = writeln!(s, "problem = {}", self.spec.name);
        if let Some(b) = self.spec.beta_minus {
            let _ = writeln!(s, "beta_minus = {b}");
        }
        if let Some(b) = self.spec.beta_plus {
            let _ = writeln!(s, "beta_plus = {b}");
        }
        let _ = writeln!(s, "# coefficients: beta_minus {}, beta_plus {}", opt(self.spec.beta_minus), opt(self.spec.beta_plus));
        let _ = writeln!(s, "ex52.swap_branches = {}", self.spec.swap_branches);
        if self.spec.is_adaptive() {
            let c = self.adaptive_config();
            let _ = writeln!(s, "mesh.n0 = {}", c.n0);
            let _ = writeln!(s, "max_dof = {}", c.options.max_dof);
            let _ = writeln!(s, "max_iterations = {}", c.options.max_iterations);
        } else if let Ok(c) = self.uniform_config() {
            let _ = writeln!(s, "levels = {}", c.levels);
            let _ = writeln!(s, "mesh.family = {}", c.family.as_str());
            let _ = writeln!(s, "mesh.n0 = {}", c.n0);
        }
        let _ = writeln!(s, "theta = {}", self.theta);
        let _ = writeln!(s, "marking.bulk_on_squares = {}", self.bulk_on_squares);
        let _ = writeln!(s, "cg_tol = {:e}", self.cg_tol);
        let _ = writeln!(s, "recovery.min_layers = {}", self.min_layers);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

fn number(v: &str) -> Result<f64> {
    let x: f64 = v.parse().with_context(|| format!("'{v}' is not a number"))?;
    if !x.is_finite() {
        bail!("'{v}' is not finite");
    }
    Ok(x)
}

fn count(v: &str) -> Result<usize> {
    v.parse().with_context(|| format!("'{v}' is not a non-negative integer"))
}

fn boolean(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => bail!("'{v}' is not a boolean"),
    }
}
