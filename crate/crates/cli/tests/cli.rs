//! End-to-end runs of the `cslab` binary.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 4] = ["--set", "n1=24", "--set", "n2=24"];

fn cslab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cslab"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("CSLAB_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, cfg: &str, extra: &[&str], threads: Option<&str>) -> Output {
    let mut args = vec!["run", cfg, "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    cslab(&args, threads)
}

#[test]
fn tilted_tube_writes_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "t.conf", "frame = tilted\nbeta = 0.3\ncsv = out/t.csv\njson = out/t.json\n");
    let out = run_in(dir.path(), &cfg, &SMALL, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/t.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "rho,so3_raw,torsion_term,F_so3,w_volume,psl2_re_raw,psl2_im_raw,F_psl_re,F_psl_im");
    assert_eq!(csv.lines().count(), 1 + 17);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/t.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], "cslab.run/1");
    assert_eq!(json["passed"], true);
    assert_eq!(json["config"]["n1"], "24");
    assert_eq!(json["results"]["euler_characteristic"], 0);
    let cs = json["results"]["cs_r_so3"].as_f64().unwrap();
    assert!((cs - 0.3f64.sin() * 1f64.sinh() * 2.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-4, "{cs}");
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "t.conf", "frame = tilted\nn_theta = 2\n");
    let read = |sub: &str, threads: &str| {
        let out_dir = dir.path().join(sub);
        let out = cslab(&["run", &cfg, "--out-dir", out_dir.to_str().unwrap(), "--set", "n1=16", "--set", "n2=16"], Some(threads));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(out_dir.join("report.csv")).unwrap(), std::fs::read(out_dir.join("report.json")).unwrap())
    };
    assert_eq!(read("one", "1"), read("four", "4"));
}

#[test]
fn graph_local_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.conf", "scenario = graph-local\ngraph_c = 0.4\ngraph_points = 3\n");
    let out = run_in(dir.path(), &cfg, &[], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x1,x2,hit1,hit2,residual");
    assert_eq!(csv.lines().count(), 1 + 9);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["scenario"], "graph-local");
    assert!(json["results"]["critical_infinity_metric_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = config(dir.path(), "bad.conf", "frame = spiral\n");
    assert_eq!(run_in(dir.path(), &bad, &[], None).status.code(), Some(2));
    let good = config(dir.path(), "ok.conf", "frame = fermi\n");
    assert_eq!(run_in(dir.path(), &good, &["--set", "nonsense=1"], None).status.code(), Some(2));
    assert_eq!(cslab(&["run", dir.path().join("missing.conf").to_str().unwrap()], None).status.code(), Some(2));
    assert_eq!(cslab(&[], None).status.code(), Some(2));
    assert_eq!(cslab(&["--suite", "everything"], None).status.code(), Some(2));
    assert_eq!(cslab(&["run", &good], Some("zero")).status.code(), Some(2));
    // A coarse grid with a wide stencil breaks the cross-pipeline identity.
    let coarse = ["--set", "n1=16", "--set", "n2=16", "--set", "fd_step=0.09", "--set", "frame=tilted"];
    let out = run_in(dir.path(), &good, &coarse, None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cross_pipeline"));
}

#[test]
fn invariant_suite_passes() {
    let out = cslab(&["--suite", "invariants", "--seed", "11"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["self_adjoint_powers", "conformal_random_convex", "decomposition_tilted"] {
        assert!(stdout.contains(name), "{stdout}");
    }
}
