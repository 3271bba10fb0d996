use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tpms_dehom::io::read_fields;
use tpms_dehom::mesh::{export_mesh, read_stl, MeshFormat};
use tpms_dehom::SurfaceMesh;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tpms-dehom"));
    c.env_remove("TPMS_DEHOM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json summary")
}

fn failure(args: &[&str]) -> Value {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let record: Value = serde_json::from_slice(&out.stderr).expect("json error record");
    assert_eq!(record["status"], "error");
    record
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,alpha,res_x,res_y,res_z,total"));
    lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn uniform_size_writes_a_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    ok(&[
        "size",
        "--uniform",
        "12.5",
        "--dims",
        "6,5,4",
        "--extents",
        "50,50,50",
        "--out",
        &o,
    ]);
    let (grid, fields) =
        read_fields(std::fs::File::open(dir.path().join("size.fld")).unwrap()).unwrap();
    assert_eq!(grid.dims(), [6, 5, 4]);
    assert_eq!(fields[0].0, "size");
    assert!(fields[0].1.values().iter().all(|&p| p == 12.5));
}

#[test]
fn preset_size_respects_table_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let s = ok(&["size", "--preset", "1d", "--coarsen", "4", "--out", &o]);
    let (lo, hi) = (s["min"].as_f64().unwrap(), s["max"].as_f64().unwrap());
    assert!(
        lo >= 0.1 && hi <= 0.5 && lo < 0.11 && hi > 0.49,
        "{lo} {hi}"
    );
}

#[test]
fn mesh_distance_without_a_mesh_is_an_error() {
    let r = failure(&["size", "--preset", "mesh-distance"]);
    assert_eq!(r["stage"], "config");
}

#[test]
fn nan_kappa_is_a_config_error() {
    let r = failure(&["dehom", "--preset", "1d", "--kappa", "NaN"]);
    assert_eq!(r["stage"], "config");
    assert!(r["message"].as_str().unwrap().contains("kappa"));
}

#[test]
fn empty_alpha_list_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    failure(&[
        "bench-residuals",
        "--preset",
        "1d",
        "--coarsen",
        "10",
        "--alphas",
        "",
        "--out",
        &o,
    ]);
}

#[test]
fn bad_thread_count_is_an_error() {
    let out = bin()
        .env("TPMS_DEHOM_THREADS", "zero")
        .args([
            "size",
            "--uniform",
            "1",
            "--dims",
            "2,2,2",
            "--extents",
            "1,1,1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("TPMS_DEHOM_THREADS"));
}

#[test]
fn unknown_flags_produce_an_error_record() {
    let out = run(&["dehom", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let r: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(r["stage"], "arguments");
}

#[test]
fn poisson_on_the_1d_example_matches_the_reported_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let s = ok(&[
        "dehom",
        "--preset",
        "1d",
        "--method",
        "poisson",
        "--no-mesh",
        "--out",
        &o,
    ]);
    let total = s["residuals"]["total"].as_f64().unwrap();
    assert!((total / 3.4e8 - 1.0).abs() < 0.05, "{total}");
    let rows = csv_rows(&dir.path().join("residuals.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "poisson");
    assert!((num(&rows[0][5]) / total - 1.0).abs() < 1e-9);
}

#[test]
fn pm_on_the_1d_example_matches_the_reported_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let s = ok(&[
        "dehom",
        "--preset",
        "1d",
        "--method",
        "pm",
        "--alpha",
        "0.75",
        "--no-mesh",
        "--out",
        &o,
    ]);
    let total = s["residuals"]["total"].as_f64().unwrap();
    assert!((total / 3.3e9 - 1.0).abs() < 0.05, "{total}");
}

#[test]
fn bench_rows_follow_the_residual_trends() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    ok(&[
        "bench-residuals",
        "--preset",
        "1d",
        "--coarsen",
        "3",
        "--out",
        &o,
    ]);
    let rows = csv_rows(&dir.path().join("bench_residuals.csv"));
    assert_eq!(rows.len(), 14);
    let (pm, poisson) = rows.split_at(7);
    assert!(pm.iter().all(|r| r[0] == "pm") && poisson.iter().all(|r| r[0] == "poisson"));
    let x: Vec<f64> = pm.iter().map(|r| num(&r[2])).collect();
    assert!(x.windows(2).all(|w| w[1] < w[0]), "{x:?}");
    assert!(x[0] > num(&pm[0][3]) && x[0] > num(&pm[0][4]));
    assert!(poisson.iter().all(|r| r[2..] == poisson[0][2..]));
    for (p, q) in pm.iter().zip(poisson) {
        assert!(num(&q[5]) < num(&p[5]));
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let runs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &runs {
        let o = out_arg(d.path());
        ok(&[
            "dehom",
            "--preset",
            "3d",
            "--coarsen",
            "12",
            "--method",
            "pm",
            "--alpha",
            "0.5",
            "--out",
            &o,
        ]);
    }
    for name in ["phases.fld", "residuals.csv", "mesh.stl"] {
        let a = std::fs::read(runs[0].path().join(name)).unwrap();
        let b = std::fs::read(runs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn dumped_presets_reproduce_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let direct = dir.path().join("direct");
    let args = [
        "--preset",
        "1d-discrete",
        "--coarsen",
        "6",
        "--method",
        "pm",
        "--alpha",
        "0.25",
    ];
    let mut a: Vec<&str> = vec!["dehom"];
    a.extend(args);
    let o = out_arg(&direct);
    a.extend(["--no-mesh", "--out", &o]);
    ok(&a);

    let mut d: Vec<&str> = vec!["dump-config"];
    d.extend(args);
    let dumped = run(&d);
    assert!(dumped.status.success());
    let cfg = dir.path().join("plan.toml");
    std::fs::write(&cfg, &dumped.stdout).unwrap();
    let replay = dir.path().join("replay");
    ok(&[
        "dehom",
        "--config",
        cfg.to_str().unwrap(),
        "--no-mesh",
        "--out",
        &out_arg(&replay),
    ]);
    for name in ["phases.fld", "residuals.csv"] {
        assert_eq!(
            std::fs::read(direct.join(name)).unwrap(),
            std::fs::read(replay.join(name)).unwrap()
        );
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "preset = \"1d\"\n[grid]\ncoarsen = 10\n[phase]\nmethod = \"pm\"\nalpha = 0.5\n",
    )
    .unwrap();
    let o = out_arg(dir.path());
    let s = ok(&[
        "dehom",
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "1.0",
        "--no-mesh",
        "--out",
        &o,
    ]);
    assert_eq!(s["residuals"]["method"], "pm");
    assert_eq!(s["residuals"]["alpha"], 1.0);
    std::fs::write(&cfg, "[grid]\nsize = 3\n").unwrap();
    failure(&["size", "--config", cfg.to_str().unwrap()]);
}

#[test]
fn mesh_only_reproduces_the_dehom_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let s = ok(&[
        "dehom",
        "--preset",
        "1d",
        "--coarsen",
        "6",
        "--method",
        "poisson",
        "--block-cells",
        "16",
        "--out",
        &out_arg(&full),
    ]);
    assert_eq!(s["mesh"]["unmatched_edges"], 0);
    assert!(s["mesh"]["volume"].as_f64().unwrap() > 0.0);
    let again = dir.path().join("again");
    let phases = full.join("phases.fld");
    ok(&[
        "mesh-only",
        "--phases",
        phases.to_str().unwrap(),
        "--blocks",
        "2,1,1",
        "--out",
        &out_arg(&again),
    ]);
    let a = read_stl(&std::fs::read(full.join("mesh.stl")).unwrap()).unwrap();
    let b = read_stl(&std::fs::read(again.join("mesh.stl")).unwrap()).unwrap();
    assert_eq!(a.canonical().geometry_hash(), b.canonical().geometry_hash());
}

#[test]
fn upsampled_meshes_stay_watertight() {
    let dir = tempfile::tempdir().unwrap();
    let s = ok(&[
        "dehom",
        "--preset",
        "3d",
        "--coarsen",
        "24",
        "--upsample",
        "3",
        "--block-cells",
        "3",
        "--kind",
        "schwarz-p",
        "--format",
        "obj",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(s["mesh"]["unmatched_edges"], 0);
    assert!(dir.path().join("mesh.obj").exists());
}

#[test]
fn surface_distance_sizes_come_from_an_stl() {
    let dir = tempfile::tempdir().unwrap();
    let tri = SurfaceMesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        vec![[0, 1, 2]],
    )
    .unwrap();
    let stl = dir.path().join("surface.stl");
    std::fs::write(&stl, export_mesh(&tri, MeshFormat::StlBinary)).unwrap();
    let s = ok(&[
        "size",
        "--preset",
        "bone",
        "--dims",
        "8,8,8",
        "--extents",
        "1,1,1",
        "--mesh",
        stl.to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
    ]);
    let (lo, hi) = (s["min"].as_f64().unwrap(), s["max"].as_f64().unwrap());
    assert!(lo >= 0.02 && hi <= 0.25 && lo < hi);
    let (_, fields) =
        read_fields(std::fs::File::open(dir.path().join("size.fld")).unwrap()).unwrap();
    let v = fields[0].1.values();
    assert!(v[0] < v[v.len() - 1]);
}
