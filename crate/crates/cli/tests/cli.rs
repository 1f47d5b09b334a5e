use abmesh::forward::FanBeamGeometry;
use abmesh::pipeline::ExperimentConfig;
use std::path::Path;
use std::process::{Command, Output};

fn abmesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abmesh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let mut c = ExperimentConfig::tomography();
    c.iterations = 2;
    c.mesh.h_init = 0.1;
    c.mesh.h_min = 0.03;
    c.mesh.h_max = 0.2;
    c.mesh.truth_h = 0.02;
    c.tomography = FanBeamGeometry {
        n_views: 6,
        n_rays: 60,
        source_radius: 3.0,
    };
    let path = dir.join("small.toml");
    std::fs::write(&path, c.to_toml().unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn preset_prints_parseable_toml() {
    let out = abmesh(&["preset", "darcy"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), ExperimentConfig::darcy());
}

#[test]
fn unknown_preset_is_a_config_error() {
    let out = abmesh(&["preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_reports_that_can_be_re_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("run");
    let out = abmesh(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "config.toml", "mesh_1.txt", "reconstruction_2.csv", "profile_2.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let again = abmesh(&["report", "--out", out_dir.to_str().unwrap()]);
    assert!(again.status.success());
}

#[test]
fn compare_writes_both_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("cmp");
    let out = abmesh(&["compare", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("comparison.csv").exists());
    assert!(out_dir.join("anisotropic/report.json").exists());
    assert!(out_dir.join("isotropic/report.json").exists());
}

#[test]
fn phantom_and_forward_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("fw");
    let o = out_dir.to_str().unwrap();
    assert!(abmesh(&["phantom", "--config", &cfg, "--out", o]).status.success());
    assert!(abmesh(&["forward", "--config", &cfg, "--out", o]).status.success());
    assert!(out_dir.join("truth.vtk").exists());
    assert!(out_dir.join("data.csv").exists());
}
