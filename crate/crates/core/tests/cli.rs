use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use charged_capillarity::{fixtures, io};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capillarity"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn energy_of_unit_square() {
    let dir = tempfile::tempdir().unwrap();
    io::write_polygon(&dir.path().join("sq.csv"), &fixtures::unit_square()).unwrap();
    let out = run(&["energy", "sq.csv", "--out", "e"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p_beta"], 3.0);
    assert_eq!(v["total"], 3.0);
    assert!(dir.path().join("e/config.json").exists());
    assert!(dir.path().join("e/panels.csv").exists());
}

#[test]
fn energy_of_disk_has_zero_robin_constant() {
    let dir = tempfile::tempdir().unwrap();
    io::write_polygon(&dir.path().join("disk.csv"), &fixtures::disk_on_floor(1024, 1.0)).unwrap();
    let out = run(&["energy", "disk.csv", "--q", "1", "--panels", "2048"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["i2"].as_f64().unwrap().abs() < 1e-3, "{v}");
    assert_eq!(v["wetted_length"], 0.0);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "0,0\n1,0\n1;1\n").unwrap();
    let out = run(&["energy", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    fs::write(dir.path().join("c.json"), r#"{"beta": 0.1, "unknown": 1}"#).unwrap();
    let out = run(&["minimize", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["minimize", "--beta", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn minimize_recovers_half_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["minimize", "--out", "m"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let m = dir.path().join("m");
    let s = json(&m.join("summary.json"));
    assert!(s["hausdorff_to_bbeta"].as_f64().unwrap() <= 0.02, "{s}");
    assert_eq!(json(&m.join("config.json"))["command"], "minimize");
    let shape = io::read_polygon(&m.join("shape.csv")).unwrap();
    assert!((shape.area() - 1.0).abs() < 1e-9);
}

#[test]
fn minimize_obeys_young_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["minimize", "--beta", "0.5", "--q", "0.05", "--out", "m"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s = json(&dir.path().join("m/summary.json"));
    assert!((s["cos_gamma"].as_f64().unwrap() - 0.5).abs() <= 0.05, "{s}");
}

#[test]
fn single_iteration_writes_one_trace_row() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"max_iters": 1}"#).unwrap();
    let out = run(&["minimize", "--config", "c.json", "--out", "m"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_column(&dir.path().join("m/trace.csv"), "iteration").len(), 1);
    assert_eq!(json(&dir.path().join("m/config.json"))["max_iters"], 1);
}

#[test]
fn sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--betas", "-0.5,0,0.5", "--qs", "0.05,0.1", "--seed", "7"];
    let a = run(&[&args[..], &["--out", "a"]].concat(), dir.path());
    let b = run(&[&args[..], &["--out", "b"]].concat(), dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let ta = fs::read(dir.path().join("a/sweep.csv")).unwrap();
    let tb = fs::read(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(csv_column(&dir.path().join("a/sweep.csv"), "beta").len(), 6);
    for d in csv_column(&dir.path().join("a/sweep.csv"), "cos_gamma_minus_beta") {
        assert!(d.abs() <= 0.05);
    }
    assert_eq!(json(&dir.path().join("a/config.json"))["seed"], 7);
}

#[test]
fn symdiff_shrinks_with_charge() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["sweep", "--betas", "0", "--qs", "0.4,0.2,0.1,0.05", "--q-convergence", "--out", "s"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let sd = csv_column(&dir.path().join("s/sweep.csv"), "symdiff_to_bbeta");
    assert!(sd.windows(2).all(|w| w[1] < w[0]), "{sd:?}");
    let qc = json(&dir.path().join("s/q_convergence.json"));
    assert!(qc["fitted_exponent"].as_f64().unwrap() >= 0.8);
}

#[test]
fn verify_quick_passes_and_catches_kernel_bug() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["verify", "--out", "v"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(dir.path().join("v/report.json").exists());
    let bad = run(&["verify", "--inject-diagonal-bug"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.lines().any(|l| l.starts_with("[FAIL]    1 disk Robin")), "{text}");
}

#[test]
fn slab_family_trends() {
    let dir = tempfile::tempdir().unwrap();
    let guarded = run(&["slab", "--beta", "1", "--q", "1"], dir.path());
    assert_eq!(guarded.status.code(), Some(2));
    let one = run(
        &["slab", "--beta", "1", "--q", "1", "--allow-degenerate-beta", "--out", "one"],
        dir.path(),
    );
    assert_eq!(one.status.code(), Some(0));
    let t = csv_column(&dir.path().join("one/slab.csv"), "total");
    assert!(t.windows(2).all(|w| w[1] < w[0]), "{t:?}");
    let zero = run(&["slab", "--q", "1", "--out", "zero"], dir.path());
    assert_eq!(zero.status.code(), Some(0));
    let t = csv_column(&dir.path().join("zero/slab.csv"), "total");
    assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
    let too_long = run(&["slab", "--radii", "1,128"], dir.path());
    assert_eq!(too_long.status.code(), Some(2));
}
