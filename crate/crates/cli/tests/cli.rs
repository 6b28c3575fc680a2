use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sle(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sle"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env_remove("SLE_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = sle(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    sle(dir, args).status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest_outputs(path: &Path) -> Vec<String> {
    json(path)["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect()
}

#[test]
fn zero_driving_trace_is_the_segment() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["trace", "--zero-driving", "--steps", "100", "--horizon", "1"]);
    let csv = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,re,im"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert!(r[1].abs() < 1e-9);
        assert!((r[2] - 2.0 * r[0].sqrt()).abs() < 1e-9);
    }
    let svg = fs::read_to_string(tmp.path().join("trace.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    let outputs = manifest_outputs(&tmp.path().join("trace.manifest.json"));
    assert_eq!(outputs, ["trace.csv", "trace.svg"]);
}

#[test]
fn trace_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        ok(d.path(), &["trace", "--kappa", "2.6666666666666665", "--seed", "1", "--steps", "500"]);
    }
    for f in ["trace.csv", "trace.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn trace_time_budget_is_a_resource_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(tmp.path(), &["trace", "--steps", "4000", "--time-budget", "1e-9"]), 4);
    assert!(!tmp.path().join("trace.csv").exists());
}

#[test]
fn survival_embeds_reference() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["survival", "--kappa", "4", "--n-paths", "500", "--s-grid", "0.5,1,1.5,2"]);
    let doc = json(&tmp.path().join("survival.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["reference"]["value"], 0.5);
    assert_eq!(doc["points"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(tmp.path().join("survival.csv")).unwrap();
    assert!(csv.starts_with("s,prob,stderr\n"));
}

#[test]
fn survival_rate_for_kappa_two() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["survival", "--kappa", "2", "--n-paths", "20000"]);
    let doc = json(&tmp.path().join("survival.json"));
    let lambda = doc["lambda_hat"].as_f64().unwrap();
    assert!((lambda - 0.75).abs() <= 0.075, "{lambda}");
    assert_eq!(doc["check"]["pass"], true);
}

#[test]
fn short_survival_grid_is_rejected() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(tmp.path(), &["survival", "--s-grid", "1"]), 2);
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn eigen_outputs() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["--name", "k8", "eigen", "--kappa", "8", "--grid", "256"]);
    let doc = json(&tmp.path().join("k8.json"));
    assert_eq!(doc["residual"].as_f64().unwrap(), 0.0);
    assert_eq!(doc["grid_size"], 256);
    ok(tmp.path(), &["--name", "k4", "eigen", "--kappa", "4"]);
    let doc = json(&tmp.path().join("k4.json"));
    assert!((doc["lambda_hat"].as_f64().unwrap() - 0.5).abs() <= 0.005);
    ok(tmp.path(), &["--name", "cd", "eigen", "--kappa", "4", "--grid", "512", "--discretization", "central-difference"]);
    assert_eq!(json(&tmp.path().join("cd.json"))["params"]["discretization"], "central-difference");
    assert_eq!(code(tmp.path(), &["eigen", "--discretization", "spline"]), 2);
}

#[test]
fn hitting_rejections() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(tmp.path(), &["hitting", "--eps", ""]), 2);
    assert_eq!(code(tmp.path(), &["hitting", "--eps", "1.0,0.5,0.1"]), 2);
    assert_eq!(code(tmp.path(), &["hitting", "--eps", "0.1,0.2,0.05"]), 2);
    assert_eq!(code(tmp.path(), &["hitting", "--z0", "0,-1"]), 2);
}

#[test]
fn hitting_rerun_from_manifest_is_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["hitting", "--kappa", "6", "--z0", "0.5,1", "--eps", "0.4,0.2,0.1", "--n-paths", "40", "--horizon", "4"];
    ok(a.path(), &args);
    let doc = json(&a.path().join("hitting.json"));
    assert_eq!(doc["reference"]["value"], 0.25);
    assert_eq!(doc["steps"], 1000);
    let manifest = a.path().join("hitting.manifest.json");
    ok(b.path(), &["--config", manifest.to_str().unwrap(), "hitting"]);
    for f in ["hitting.csv", "hitting.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    // a manifest for another experiment is refused
    assert_eq!(code(b.path(), &["--config", manifest.to_str().unwrap(), "survival"]), 2);
}

#[test]
fn hitting_stability_check() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["hitting", "--eps", "0.4,0.2,0.1", "--n-paths", "30", "--horizon", "2", "--stability-check"],
    );
    let st = &json(&tmp.path().join("hitting.json"))["stability"];
    assert_eq!(st["horizon"], 4.0);
    assert_eq!(st["points"].as_array().unwrap().len(), 3);
}

#[test]
fn config_precedence() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[eigen]\nkappa = 6.0\ngrid = 128\n\n[trace]\nsteps = 7\n").unwrap();
    let out = tmp.path().join("out");
    ok(&out, &["--config", cfg.to_str().unwrap(), "eigen", "--grid", "64"]);
    let params = &json(&out.join("eigen.manifest.json"))["params"];
    assert_eq!(params["kappa"], 6.0);
    assert_eq!(params["grid"], 64);
    fs::write(&cfg, "[eigen]\nkapa = 6.0\n").unwrap();
    assert_eq!(code(&out, &["--config", cfg.to_str().unwrap(), "eigen"]), 2);
}

#[test]
fn twopoint_outputs_and_rejections() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(tmp.path(), &["twopoint", "--eps", "0.6,0.3,0.1"]), 2);
    assert_eq!(code(tmp.path(), &["twopoint", "--separation-eps", "0.2"]), 2);
    // too few paths for any joint hit: the data is written, the fit fails
    assert_eq!(code(tmp.path(), &["twopoint", "--n-paths", "5", "--horizon", "4", "--steps", "400"]), 3);
    let doc = json(&tmp.path().join("twopoint.json"));
    assert!(doc["fit_error"].as_str().unwrap().contains("usable points"));
    assert_eq!(doc["check"]["pass"], false);
    assert!((doc["reference"]["value"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    let sep = json(&tmp.path().join("twopoint-separation.json"));
    assert_eq!(sep["experiment"], "twopoint-separation");
    let csv = fs::read_to_string(tmp.path().join("twopoint.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 + 3);
    let outputs = manifest_outputs(&tmp.path().join("twopoint.manifest.json"));
    assert_eq!(outputs, ["twopoint.csv", "twopoint.json", "twopoint-separation.json"]);
}

#[test]
fn boxdim_outputs_and_resolution_error() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["boxdim", "--kappa", "2", "--steps", "2000", "--eps", "0.2,0.1,0.05,0.02"]);
    let doc = json(&tmp.path().join("boxdim.json"));
    for k in ["kappa", "n_steps", "eps_range", "D_hat", "stderr"] {
        assert!(!doc[k].is_null(), "{k}");
    }
    assert_eq!(doc["reference"]["value"], 1.25);
    assert!(fs::read_to_string(tmp.path().join("boxdim.csv")).unwrap().starts_with("eps,count\n"));
    // refinement disabled in effect: a mesh coarser than the boxes allow
    assert_eq!(code(tmp.path(), &["boxdim", "--steps", "100", "--mesh", "0.5", "--eps", "0.2,0.1,0.05,0.02"]), 3);
}

#[test]
fn partition_outputs() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["partition", "--k1-max", "1", "--k2-max", "1", "--a", "0.5", "--c", "1"]);
    let doc = json(&tmp.path().join("partition.json"));
    let rows = doc["points"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    // pairs (m, l) = ((1), (1)) and ((0, 1), (1, 0)), weights a² and a³
    let sum = rows[0]["sum"].as_f64().unwrap();
    assert!((sum - (0.25 + 0.125)).abs() < 1e-15, "{sum}");
    ok(tmp.path(), &["partition"]);
    assert_eq!(json(&tmp.path().join("partition.json"))["check"]["pass"], true);
    assert_eq!(code(tmp.path(), &["partition", "--budget", "100"]), 4);
    assert_eq!(code(tmp.path(), &["partition", "--a", "1.5"]), 2);
}

#[test]
fn report_table() {
    let tmp = TempDir::new().unwrap();
    let runs = tmp.path().join("runs");
    fs::create_dir(&runs).unwrap();
    ok(tmp.path(), &["report", runs.to_str().unwrap()]);
    let md = fs::read_to_string(tmp.path().join("report.md")).unwrap();
    assert_eq!(md.lines().count(), 2);
    ok(&runs, &["--name", "e6", "eigen", "--kappa", "6", "--grid", "256"]);
    ok(&runs, &["--name", "e2", "eigen", "--kappa", "2", "--grid", "256"]);
    ok(&runs, &["partition", "--k1-max", "3", "--k2-max", "3"]);
    ok(tmp.path(), &["report", runs.to_str().unwrap()]);
    let md = fs::read_to_string(tmp.path().join("report.md")).unwrap();
    let first: Vec<&str> = md.lines().skip(2).map(|l| l.split('|').nth(1).unwrap().trim()).collect();
    let kappas: Vec<&str> = md.lines().skip(2).map(|l| l.split('|').nth(2).unwrap().trim()).collect();
    assert_eq!(first, ["eigen", "eigen", "partition"]);
    assert_eq!(kappas, ["2.0000", "6.0000", "-"]);
}

#[test]
fn threads_flag_and_env() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(tmp.path(), &["--threads", "0", "partition", "--k1-max", "1", "--k2-max", "1"]), 2);
    ok(tmp.path(), &["--threads", "1", "partition", "--k1-max", "1", "--k2-max", "1"]);
    let out = Command::new(env!("CARGO_BIN_EXE_sle"))
        .args(["--out", tmp.path().to_str().unwrap(), "partition", "--k1-max", "1", "--k2-max", "1"])
        .env("SLE_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}
