use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ifem_cli::{run, Settings};
use ifem_core::experiment::{refine_uniformly, ProblemSpec};
use ifem_core::mesh::build_fitted_mesh;
use ifem_core::mesh::io::write_mesh;

#[derive(Parser)]
#[command(name = "ifem", version, about = "Interface finite elements with immersed gradient recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark and write CSV tables, a summary and SVG plots.
    Run(RunArgs),
    /// Write the initial fitted mesh of a benchmark.
    DumpMesh(DumpArgs),
    /// Print the version.
    Version,
}

#[derive(Args)]
struct RunArgs {
    /// ex51, ex52, ex53, ex54 or smoke
    problem: String,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    beta_minus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta_plus: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    max_dof: Option<usize>,
    #[arg(long)]
    cg_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recorded with the run; the solver path does not use randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// A `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides one setting, e.g. `--set marking.bulk_on_squares=false`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Also write the final mesh.
    #[arg(long)]
    dump_mesh: bool,
    /// Also write the final recovered gradient.
    #[arg(long)]
    dump_gradient: bool,
    /// Skip the SVG plots.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Args)]
struct DumpArgs {
    problem: String,
    /// Background grid cells per side; the benchmark's default when omitted.
    #[arg(long)]
    n: Option<usize>,
    /// Uniform refinements applied after the build.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn settings(a: &RunArgs) -> Result<Settings> {
    let mut s = Settings::new(&a.problem)?;
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        s.apply_text(&text).with_context(|| format!("in {}", path.display()))?;
    }
    for pair in &a.set {
        s.set_pair(pair)?;
    }
    let flags = [
        ("levels", a.levels.map(|v| v.to_string())),
        ("beta_minus", a.beta_minus.map(|v| v.to_string())),
        ("beta_plus", a.beta_plus.map(|v| v.to_string())),
        ("theta", a.theta.map(|v| v.to_string())),
        ("max_dof", a.max_dof.map(|v| v.to_string())),
        ("cg_tol", a.cg_tol.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, &v).with_context(|| format!("--{}", k.replace('_', "-")))?;
        }
    }
    if let Some(out) = &a.out {
        s.out = out.clone();
    }
    s.dump_mesh |= a.dump_mesh;
    s.dump_gradient |= a.dump_gradient;
    s.plots &= !a.no_plots;
    Ok(s)
}

fn dump_mesh(a: &DumpArgs) -> Result<()> {
    if !ifem_cli::config::PROBLEMS.contains(&a.problem.as_str()) {
        bail!("unknown problem '{}'", a.problem);
    }
    let spec = ProblemSpec::new(&a.problem);
    let problem = spec.build().context("stage: problem setup")?;
    let n = a.n.unwrap_or_else(|| spec.initial_n());
    let mut mesh = build_fitted_mesh(problem.level_set(), problem.domain(), n).context("stage: mesh build")?;
    for _ in 0..a.refine {
        mesh = refine_uniformly(&mesh, problem.level_set()).context("stage: refinement")?;
    }
    let text = write_mesh(&mesh);
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("IFEM_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("IFEM_THREADS='{v}' is not a count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

fn main_inner() -> Result<()> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Version => println!("ifem {}", env!("CARGO_PKG_VERSION")),
        Command::DumpMesh(a) => dump_mesh(&a)?,
        Command::Run(a) => {
            let s = settings(&a).context("stage: configuration")?;
            let outcome = run::run(&s)?;
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
