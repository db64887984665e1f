//! Runs an experiment and writes its report files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ifem_core::adapt::AdaptStep;
use ifem_core::error_norms::Column;
use ifem_core::experiment::{run_adaptive, run_uniform};
use ifem_core::mesh::io::write_mesh;
use ifem_core::ErrorRecord;

use crate::report;
use crate::svg::{loglog_svg, mesh_svg, Series};
use crate::Settings;

/// Meshes with more triangles than this are not drawn.
pub const MAX_PLOT_TRIANGLES: usize = 250_000;

/// What a run produced.
#[derive(Debug)]
pub struct Outcome {
    pub records: Vec<ErrorRecord>,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("stage: write report, cannot write {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn series(records: &[ErrorRecord], columns: &[(&str, Column)]) -> Vec<Series> {
    columns
        .iter()
        .map(|&(label, c)| Series {
            label: label.to_string(),
            points: records.iter().map(|r| (r.dof as f64, c.of(r))).collect(),
        })
        .collect()
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let problem = settings.spec.build().context("stage: problem setup")?;
    let dir = &settings.out;
    fs::create_dir_all(dir).with_context(|| format!("stage: write report, cannot create {}", dir.display()))?;
    let name = settings.name().to_string();
    let mut files = Vec::new();

    let (records, last, summary, csv, full, plot) = if settings.spec.is_adaptive() {
        let cfg = settings.adaptive_config();
        let run = run_adaptive(problem.as_ref(), &cfg).context("stage: adaptive run")?;
        let plot = loglog_svg(
            &format!("{name}: adaptive refinement"),
            "dof",
            &series(
                &run.records,
                &[
                    ("energy error", Column::Energy),
                    ("estimator eta", Column::Eta),
                    ("recovered energy", Column::RecoveredEnergy),
                ],
            ),
        );
        (
            run.records.clone(),
            run.last,
            report::adaptive_summary(&run.records),
            report::adaptive_csv(&run.records, false),
            report::adaptive_csv(&run.records, true),
            plot,
        )
    } else {
        let cfg = settings.uniform_config().context("stage: configuration")?;
        let run = run_uniform(problem.as_ref(), &cfg).context("stage: uniform run")?;
        let plot = loglog_svg(
            &format!("{name}: uniform refinement"),
            "dof",
            &series(
                &run.records,
                &[("De", Column::De), ("Die", Column::Die), ("Dre", Column::Dre), ("Dpe", Column::Dpe)],
            ),
        );
        (
            run.records.clone(),
            run.last,
            report::uniform_summary(&run.records),
            report::uniform_csv(&run.records, false),
            report::uniform_csv(&run.records, true),
            plot,
        )
    };

    write(dir, &format!("{name}.csv"), &csv, &mut files)?;
    write(dir, &format!("{name}.full.csv"), &full, &mut files)?;
    write(dir, &format!("{name}.config"), &settings.describe(), &mut files)?;
    write(dir, &format!("{name}.summary.txt"), &summary, &mut files)?;
    if settings.plots {
        write(dir, &format!("{name}_convergence.svg"), &plot, &mut files)?;
        write_mesh_plots(dir, &name, &last, &mut files)?;
    }
    if settings.dump_mesh {
        write(dir, &format!("{name}.mesh"), &write_mesh(&last.mesh), &mut files)?;
    }
    if settings.dump_gradient {
        write(dir, &format!("{name}.grad"), &last.gradient.to_text(), &mut files)?;
    }
    Ok(Outcome { records, files, summary })
}

fn write_mesh_plots(dir: &Path, name: &str, last: &AdaptStep, files: &mut Vec<PathBuf>) -> Result<()> {
    let mesh = &last.mesh;
    if mesh.n_triangles() > MAX_PLOT_TRIANGLES {
        return Ok(());
    }
    write(dir, &format!("{name}_mesh.svg"), &mesh_svg(mesh, None), files)?;
    let mean: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| last.solution.local_values(mesh, t).iter().sum::<f64>() / 3.0)
        .collect();
    write(dir, &format!("{name}_solution.svg"), &mesh_svg(mesh, Some(&mean)), files)
}
