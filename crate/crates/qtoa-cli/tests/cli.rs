use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qtoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtoa")).args(args).output().expect("run qtoa")
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], cfg: Option<&Path>, out: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    if let Some(c) = cfg {
        all.extend(["--config", c.to_str().unwrap()]);
    }
    all.extend(["--out", out.to_str().unwrap()]);
    qtoa(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

const SMALL_DISTRIBUTION: &str = r#"
experiment = "determinism"
[spectrum]
nodes = 128
tol = 1e-4
[distribution]
tau_min = -0.24
tau_max = -0.09
points = 301
covariance_times = [0.05]
"#;

#[test]
fn identical_configs_give_identical_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "run.toml", SMALL_DISTRIBUTION);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&["distribution", "--threads", "1"], Some(&cfg), &a).status.success());
    assert!(run(&["distribution", "--threads", "3"], Some(&cfg), &b).status.success());
    let (fa, fb) = (sorted_files(&a), sorted_files(&b));
    assert_eq!(fa.len(), fb.len());
    assert!(fa.iter().any(|p| p.ends_with("distribution.csv")));
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn csv_headers_carry_units_and_floats_seventeen_digits() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("semi");
    assert!(run(&["semiclassical"], None, &out).status.success());
    let text = fs::read_to_string(out.join("semiclassical.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.split(',').all(|h| h.contains('[') && h.ends_with(']')), "{header}");
    for line in lines {
        for cell in line.split(',').skip(1) {
            let digits = cell.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(digits.len(), 17, "{cell}");
            cell.parse::<f64>().unwrap();
        }
    }
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["branch_convention"]["cut_side"], "below");
    let c = &m["records"]["leading_expansion"]["classical"];
    assert!(c["re"].as_f64().unwrap() < 0.0);
    assert!((c["magnitude"].as_f64().unwrap() - 0.166206).abs() < 1e-6);
    assert!(m["versions"]["qtoa"].is_string());
}

#[test]
fn unknown_keys_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "bad.toml", "[state]\nq0 = -5.0\nwidth = 1.0\n");
    let out = tmp.path().join("out");
    let o = run(&["expectation"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(2));
    let e = json(&out.join("error.json"));
    assert_eq!(e["kind"], "config");
    assert!(e["message"].as_str().unwrap().contains("width"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn empty_sweep_axis_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "sweep.toml", "[sweep]\noutput = \"correction\"\nq0 = []\n");
    let o = run(&["sweep"], Some(&cfg), &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let none = run(&["sweep"], None, &tmp.path().join("none"));
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn invalid_flags_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(&["semiclassical", "--tolerance", "0"], None, tmp.path()).status.code(), Some(2));
    assert_eq!(run(&["semiclassical", "--threads", "0"], None, tmp.path()).status.code(), Some(2));
    let cfg = config(tmp.path(), "x.toml", "");
    assert_eq!(run(&["reproduce", "fig2"], Some(&cfg), tmp.path()).status.code(), Some(2));
}

#[test]
fn exhausted_precision_is_a_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "heavy.toml", "[physics]\nmass = 20.0\n[spectrum]\nnodes = 128\ntol = 1e-4\n");
    let out = tmp.path().join("out");
    assert_eq!(run(&["spectrum"], Some(&cfg), &out).status.code(), Some(3));
    let e = json(&out.join("error.json"));
    assert_eq!(e["kind"], "numerical");
    assert_eq!(e["exit_code"], 3);
}

#[test]
fn failing_sweep_points_are_recorded() {
    let tmp = TempDir::new().unwrap();
    let text = "[spectrum]\nnodes = 128\ntol = 1e-4\n[distribution]\npoints = 101\n\
                [sweep]\noutput = \"distribution\"\nmu = [1.0, 20.0]\n";
    let cfg = config(tmp.path(), "sweep.toml", text);
    let out = tmp.path().join("out");
    assert_eq!(run(&["sweep"], Some(&cfg), &out).status.code(), Some(3));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["status"], "partial-failure");
    let points = m["records"]["points"].as_array().unwrap();
    assert_eq!(points[0]["status"], "ok");
    assert_eq!(points[1]["status"], "error");
    assert!(out.join("point_0000.csv").exists());
    assert!(!out.join("point_0001.csv").exists());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().contains("resolve"));
}

#[test]
fn correction_sweep_covers_the_grid() {
    let tmp = TempDir::new().unwrap();
    let text = "[sweep]\noutput = \"correction\"\nmu = [1.0, 2.0]\nv0 = [20.0, 30.0, 40.0]\n";
    let cfg = config(tmp.path(), "sweep.toml", text);
    let out = tmp.path().join("out");
    assert!(run(&["sweep"], Some(&cfg), &out).status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["records"]["axes"]["q0"], serde_json::json!([-5.0]));
}

#[test]
fn reproduce_writes_pinned_datasets() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig2");
    assert!(run(&["reproduce", "fig2"], None, &out).status.success());
    let csv = fs::read_to_string(out.join("fig2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 101);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "reproduce fig2");
    assert_eq!(m["experiment"], "fig2");

    let out = tmp.path().join("cs");
    assert!(run(&["reproduce", "sec4-cs"], None, &out).status.success());
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["inputs"]["pinned"]["cs133_mass_kg"], 2.207e-25);
    let q = &m["records"]["quoted_correction2"];
    assert!((q["computed"].as_f64().unwrap() - 4.3263054e-17).abs() < 1e-24);
}
