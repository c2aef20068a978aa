use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GRID: [&str; 6] = ["--t-min", "-0.02", "--t-max", "6.263185307179586", "--t-nodes", "101"];

fn floquet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn verify_free_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = floquet(&["verify", "--fixture", "free", "--K", "8", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v["data"]["all_pass"], Value::Bool(true));
}

#[test]
fn bands_of_constant_operator() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = floquet(&["bands", "--fixture", "constant", "--K", "4", "--t-min", "0", "--t-max", "0.1", "--t-nodes", "11", "--format", "tabular", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 11 * 2 * 9);
}

#[test]
fn expansion_reuses_stored_bands() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let mut bands = vec!["bands", "--fixture", "free", "--K", "4", "--out", a.to_str().unwrap()];
    bands.extend(GRID);
    assert!(floquet(&bands).status.success());
    let stored = a.join("bands.json");
    let base = ["expand", "--fixture", "free", "--function-fixture", "bump", "--K", "4"];
    let mut with = base.to_vec();
    with.extend(["--bands", stored.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    with.extend(GRID);
    let mut without = base.to_vec();
    without.extend(["--out", c.to_str().unwrap()]);
    without.extend(GRID);
    let (ow, oo) = (floquet(&with), floquet(&without));
    assert!(ow.status.success(), "{}", String::from_utf8_lossy(&ow.stderr));
    assert!(oo.status.success(), "{}", String::from_utf8_lossy(&oo.stderr));
    let (x, y) = (json(&b.join("expansion.json")), json(&c.join("expansion.json")));
    let err = |v: &Value| v["data"]["relative_error"].as_f64().unwrap();
    assert!((err(&x) - err(&y)).abs() < 1e-12, "{} vs {}", err(&x), err(&y));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = floquet(&["spectrum", "--fixture", "perturbed", "--K", "6", "--t", "0.4", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(p.join("spectrum.json")).unwrap()
    };
    assert_eq!(run("x"), run("y"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "fixture = \"free\"\nK = 3\nt = 0.25\n").unwrap();
    let spectrum_len = |extra: &[&str], name: &str| {
        let p = dir.path().join(name);
        let mut args = vec!["spectrum", "--config", cfg.to_str().unwrap(), "--out", p.to_str().unwrap()];
        args.extend(extra);
        let o = floquet(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        json(&p.join("spectrum.json"))["data"]["pairs"].as_array().unwrap().len()
    };
    assert_eq!(spectrum_len(&[], "cfg"), 2 * 3 + 1);
    assert_eq!(spectrum_len(&["--K", "5"], "flag"), 2 * 5 + 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(floquet(&["spectrum", "--fixture", "nope", "--t", "0.1", "--out", &out]).status.code(), Some(1));
    assert_eq!(floquet(&["spectrum", "--fixture", "free", "--t", "0.1", "--h", "0.03", "--out", &out]).status.code(), Some(1));
    let o = floquet(&["census", "--fixture", "constant3", "--t", "0.0", "--K", "8", "--n0", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
