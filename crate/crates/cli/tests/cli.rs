use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ifem_core::mesh::io::read_mesh;

fn ifem(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ifem"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ifem-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn version_prints_the_package_version() {
    let out = ifem(&["version"], &[]);
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("ifem {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn uniform_run_writes_tables_and_is_reproducible() {
    let dir = scratch("uniform");
    let d = dir.to_str().unwrap();
    let out = ifem(&["run", "ex51", "--beta-plus", "10", "--levels", "3", "--out", d], &[]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("final orders in dof"));
    let csv = dir.join("ex51.csv");
    let first = fs::read(&csv).unwrap();
    let first_full = fs::read(dir.join("ex51.full.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "dof,De,De_order,Die,Die_order,Dre,Dre_order,Dpe,Dpe_order");
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 3);
    let dofs: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(dofs.windows(2).all(|w| w[1] > w[0]), "{dofs:?}");
    assert!(rows[1][1].contains("e-"), "three-digit scientific notation: {}", rows[1][1]);
    for f in ["ex51_convergence.svg", "ex51_mesh.svg", "ex51_solution.svg", "ex51.config", "ex51.summary.txt"] {
        assert!(dir.join(f).exists(), "{f}");
    }

    let again = ifem(&["run", "ex51", "--beta-plus", "10", "--levels", "3", "--out", d], &[("IFEM_THREADS", "1")]);
    ok(&again);
    assert_eq!(fs::read(&csv).unwrap(), first);
    assert_eq!(fs::read(dir.join("ex51.full.csv")).unwrap(), first_full);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn large_jumps_give_the_same_orders() {
    let orders = |bp: &str| {
        let dir = scratch(&format!("jump{bp}"));
        ok(&ifem(&["run", "ex51", "--beta-plus", bp, "--levels", "3", "--no-plots", "--out", dir.to_str().unwrap()], &[]));
        let rows = csv_rows(&dir.join("ex51.full.csv"));
        let _ = fs::remove_dir_all(&dir);
        [2, 4, 6, 8].map(|c| rows[2][c].parse::<f64>().unwrap())
    };
    let (a, b) = (orders("1000"), orders("1000000"));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 0.02, "{a:?} vs {b:?}");
    }
}

#[test]
fn adaptive_run_writes_the_iteration_table() {
    let dir = scratch("adaptive");
    let out = ifem(
        &["run", "ex53", "--beta-minus", "1000", "--max-dof", "1500", "--out", dir.to_str().unwrap(), "--dump-mesh", "--dump-gradient"],
        &[],
    );
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("slopes over the final half"), "{stdout}");
    let text = fs::read_to_string(dir.join("ex53.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "iter,dof,energy_err,eta,kappa");
    let rows = csv_rows(&dir.join("ex53.csv"));
    assert!(rows.len() > 3);
    assert_eq!(rows[0][1], "25");
    let mesh = read_mesh(&fs::read_to_string(dir.join("ex53.mesh")).unwrap()).unwrap();
    assert_eq!(mesh.n_vertices().to_string(), rows[rows.len() - 1][1]);
    assert!(fs::read_to_string(dir.join("ex53.grad")).unwrap().starts_with("ifem-grad v1\n"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn config_file_and_overrides_are_recorded() {
    let dir = scratch("config");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "# smooth run\nlevels = 2\nbeta_minus = 3\nmarking.bulk_on_squares = false\n").unwrap();
    let out = ifem(
        &["run", "smoke", "--config", cfg.to_str().unwrap(), "--set", "cg_tol=1e-11", "--levels", "3", "--no-plots", "--out", dir.to_str().unwrap()],
        &[],
    );
    ok(&out);
    let effective = fs::read_to_string(dir.join("smoke.config")).unwrap();
    for line in ["levels = 3", "beta_minus = 3", "marking.bulk_on_squares = false", "cg_tol = 1e-11"] {
        assert!(effective.contains(line), "{line} missing from\n{effective}");
    }
    assert_eq!(csv_rows(&dir.join("smoke.csv")).len(), 3);
    assert!(!dir.join("smoke_mesh.svg").exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn errors_exit_nonzero_and_name_the_stage() {
    let out = ifem(&["run", "ex51", "--beta-plus", "-1", "--no-plots", "--out", scratch("err").to_str().unwrap()], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage: problem setup"));

    let out = ifem(&["run", "ex99"], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown problem"));

    let out = ifem(&["run", "ex51", "--set", "nonsense=1"], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage: configuration"));

    let out = ifem(&["version"], &[("IFEM_THREADS", "many")]);
    assert!(!out.status.success());
}

#[test]
fn dump_mesh_round_trips() {
    let out = ifem(&["dump-mesh", "ex54"], &[]);
    ok(&out);
    let mesh = read_mesh(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(mesh.n_triangles(), 128);

    let dir = scratch("dump");
    let file = dir.join("ex51.mesh");
    ok(&ifem(&["dump-mesh", "ex51", "--refine", "1", "--out", file.to_str().unwrap()], &[]));
    let mesh = read_mesh(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(mesh.n_vertices(), 441);
    let _ = fs::remove_dir_all(&dir);
}
