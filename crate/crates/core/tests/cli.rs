use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rotflow::pipeline::manifest::sha256_hex;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn rotflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotflow"))
        .args(args)
        .env("ROTFLOW_MAX_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn assert_manifest_complete(dir: &Path) {
    let m = manifest(dir);
    let listed: Vec<String> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    let mut on_disk = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path != dir.join("manifest.json") {
                on_disk.push(path.strip_prefix(dir).unwrap().to_str().unwrap().replace('\\', "/"));
            }
        }
    }
    on_disk.sort();
    assert_eq!(listed, on_disk);
    for f in m["files"].as_array().unwrap() {
        let bytes = fs::read(dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn build_writes_grids_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let o = rotflow(&["--quiet", "build", "-c", p(&fixture("two_bump.toml")), "-o", p(&out), "--override", "build.resolution=257"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["phi.grid", "vx.grid", "vy.grid", "omega.grid", "residual.json", "spec.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let header = fs::read(out.join("omega.grid")).unwrap();
    let nl = header.iter().position(|&b| b == b'\n').unwrap();
    assert_eq!(std::str::from_utf8(&header[..nl]).unwrap(), "256 256 -10 -10 0.078125 0.078125 omega");
    assert_eq!(header.len(), nl + 1 + 256 * 256 * 8);
    assert_manifest_complete(&out);
    let m = manifest(&out);
    assert_eq!(m["config"]["build"]["resolution"], 257);
    assert_eq!(m["stages"][1]["name"], "build");
    assert_eq!(m["stages"][1]["status"], "ok");
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("residual.json")).unwrap()).unwrap();
    assert!(r["normalized_max"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["exterior_max_speed"].as_f64().unwrap(), 0.0);
}

#[test]
fn outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = rotflow(&[
            "-q", "simulate", "-c", p(&fixture("two_bump.toml")), "-o", p(out),
            "--override", "grid.resolution=64", "--override", "solver.horizon_time=0.2", "--override", "solver.snapshot_every=20",
        ]);
        assert!(o.status.code().is_some());
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert!(a.join("snapshots/index.csv").is_file());
}

#[test]
fn overlapping_bumps_exit_with_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rotflow(&["-q", "build", "-c", p(&fixture("overlap.toml")), "-o", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("disjointness violated"));
}

#[test]
fn invalid_config_is_rejected_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = rotflow(&["-q", "build", "-c", p(&fixture("two_bump.toml")), "-o", p(&out), "--override", "grid.half_width=8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn coarse_simulation_misses_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = rotflow(&["-q", "simulate", "-c", p(&fixture("two_bump_coarse.toml")), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("tolerance not met"));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,energy,enstrophy,min_w,max_w,e_rot,bump0_angle,bump1_angle"));
    assert_eq!(manifest(&out)["stages"][1]["status"], "failed");
    assert_manifest_complete(&out);
}

#[test]
fn analyze_reports_structure() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, verdict) in [
        ("two_bump.toml", "verdict: locally radial, not radial"),
        ("radial.toml", "verdict: radial"),
        ("sheared_import.toml", "verdict: not locally radial (numerically)"),
    ] {
        let out = tmp.path().join(name);
        let o = rotflow(&["-q", "analyze", "-c", p(&fixture(name)), "-o", p(&out)]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(fs::read_to_string(out.join("structure.txt")).unwrap().contains(verdict), "{name}");
        for f in ["symmetry_set.csv", "boundary_gradient.csv", "rigidity.txt", "rigidity.json", "relation_global.csv"] {
            assert!(out.join(f).is_file(), "{name}: {f}");
        }
        assert_manifest_complete(&out);
    }
}

#[test]
fn sweep_collects_cells_and_tolerates_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = rotflow(&[
        "-q", "sweep", "-c", p(&fixture("two_bump.toml")), "-o", p(&out),
        "--param", "grid.resolution=32,64", "--param", "flow.angular_velocity=-1,1",
        "--override", "build.resolution=65", "--override", "solver.horizon_time=0.1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let lines: Vec<&str> = agg.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("cell,grid.resolution,flow.angular_velocity,status,residual,e_final"));
    assert!(lines[1].starts_with("0000,32,-1,"));
    assert!(lines[4].starts_with("0003,64,1,"));
    assert!(lines[1].contains(",failed,"));
    for k in 0..4 {
        assert!(out.join(format!("cell_{k:04}/manifest.json")).is_file());
    }
    assert_manifest_complete(&out);
}

#[test]
fn empty_sweep_range_writes_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("e");
    let o = rotflow(&["-q", "sweep", "-c", p(&fixture("two_bump.toml")), "-o", p(&out), "--param", "grid.resolution="]);
    assert_eq!(o.status.code(), Some(0));
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1);
}

#[test]
fn resolution_sweep_error_decreases() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("n");
    let o = rotflow(&[
        "-q", "sweep", "-c", p(&fixture("two_bump.toml")), "-o", p(&out), "--stages", "simulate",
        "--param", "grid.resolution=128,256,512", "--override", "solver.horizon_time=0.5",
    ]);
    assert!(o.status.success());
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let errors: Vec<f64> = agg.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 3);
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn resolved_radial_run_is_stationary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = rotflow(&["-q", "simulate", "-c", p(&fixture("radial.toml")), "-o", p(&out), "--override", "grid.resolution=512"]);
    assert_eq!(o.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("simulation.json")).unwrap()).unwrap();
    assert!(s["max_error"].as_f64().unwrap() <= 1e-8);
}
