use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parablend"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn result(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn limit_set_cover_passes() {
    let out = run(&["ifs-coverage", "--depth", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let v = result(&out);
    assert!(v["result"]["hausdorff_bound"].as_f64().unwrap() <= v["result"]["limit"].as_f64().unwrap());
}

#[test]
fn box_outside_the_reachable_set_exits_with_two() {
    let out = run(&[
        "ifs-coverage", "--depth", "4", "--jet-depth", "8", "--lower", "2.5,-0.01", "--upper", "2.6,0.01",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(result(&out)["passed"], false);
}

#[test]
fn malformed_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sweep]\nunknown_field = 3\n").unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "sweep"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn config_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[paratangency]\ndepth = 5\nseed = 3\n").unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "paratangency", "--depth", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let v = result(&out);
    assert_eq!(v["result"]["depth"], 12);
    assert_eq!(v["result"]["seed"], 3);
    assert_eq!(v["result"]["word"].as_array().unwrap().len(), 12);
}

#[test]
fn flatten_and_sinks_certify() {
    let out = run(&["flatten", "--samples", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["sinks", "--grid", "5", "--boxes", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(result(&out)["result"]["plan"]["period"], 14);
}

#[test]
fn sweep_outputs_round_trip_through_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let json_out = p("summary.json");
    let out = run(&[
        "--json", &json_out, "sweep", "--depth", "2", "--csv", &p("grid.csv"), "--svg", &p("grid.svg"),
        "--certificates", &p("full.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["summary.json", "grid.csv", "grid.certificates.json", "grid.svg", "full.json"] {
        assert!(Path::new(&p(f)).exists(), "{f} missing");
    }
    let out = run(&["report", &p("full.json"), "--csv", &p("again.csv")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(p("grid.csv")).unwrap(), std::fs::read(p("again.csv")).unwrap());
}

#[test]
fn control_sweep_has_no_sinks() {
    let out = run(&["sweep", "--depth", "2", "--control"]);
    assert_eq!(out.status.code(), Some(0));
    let v = result(&out);
    assert_eq!(v["result"]["thickened_coverage"].as_f64(), Some(0.0));
}
