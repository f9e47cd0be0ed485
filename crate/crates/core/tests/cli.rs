use std::fs;
use std::path::{Path, PathBuf};

use epictrl::cli::run;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn epictrl(args: &[&str]) -> i32 {
    run(std::iter::once("epictrl").chain(args.iter().copied()))
}

fn out_dir(root: &Path, name: &str) -> PathBuf {
    root.join(name)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn viability_writes_zone_table_and_classification() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "viability");
    assert_eq!(epictrl(&["viability", "italy-2020", "--out", out.to_str().unwrap()]), 0);
    let zones = fs::read_to_string(out.join("zones.csv")).unwrap();
    let mut lines = zones.lines();
    assert_eq!(lines.next(), Some("s,phi0,psi0,phimax"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 1000);
    assert!((rows[0][0] - 1e-3).abs() < 1e-15 && (rows[999][0] - 1.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r[1] <= r[2] + 1e-11 && r[2] <= r[3] + 1e-11));
    assert_eq!(read_json(&out.join("report.json"))["zone"], "ViableLockdown");
}

#[test]
fn optimize_reports_a_feasible_lockdown() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "optimize");
    assert_eq!(epictrl(&["optimize", "italy-2020", "--lambda2", "5", "--out", out.to_str().unwrap()]), 0);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["feasible"], true);
    assert!(report["switch_times"]["tau0"].as_f64().unwrap() > 0.0);
    assert!(report["best_cost"]["total"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,s,i,u,cumulative_cost\n"));
    let peak = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(peak <= 0.0031 + 1e-9, "peak {peak}");
}

#[test]
fn simulate_output_is_deterministic_and_overridable() {
    let tmp = tempfile::tempdir().unwrap();
    let a = out_dir(tmp.path(), "a");
    let b = out_dir(tmp.path(), "b");
    for dir in [&a, &b] {
        let code =
            epictrl(&["simulate", "delta-2021", "--horizon", "50", "--step", "0.05", "--out", dir.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let first = fs::read(a.join("trajectory.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("trajectory.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 1001);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("5.00000000000e1,"), "{last}");
}

#[test]
fn greedy_and_verify_run_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path(), "greedy");
    assert_eq!(epictrl(&["greedy", &fixture("delta-2021.toml"), "--out", out.to_str().unwrap()]), 0);
    let report = read_json(&out.join("report.json"));
    assert!(report["switch_times"]["tau2"].as_f64().unwrap() > report["switch_times"]["tau1"].as_f64().unwrap());

    let out = out_dir(tmp.path(), "verify");
    assert_eq!(epictrl(&["verify", &fixture("italy-2020-no-icu.toml"), "--out", out.to_str().unwrap()]), 0);
    let report = read_json(&out.join("report.json"));
    assert!(report["stationarity_fraction"].as_f64().unwrap() >= 0.95);
}

#[test]
fn unknown_preset_fails_with_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(epictrl(&["simulate", "wuhan-2019", "--out", tmp.path().to_str().unwrap()]), 1);
}

#[test]
fn bad_scenario_files_fail_with_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("italy-2020.toml")).unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, text.replace("gamma = 0.0714", "gamma = -1.0")).unwrap();
    assert_eq!(epictrl(&["simulate", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]), 1);
    let extra = tmp.path().join("extra.toml");
    fs::write(&extra, format!("{text}colour = 3\n")).unwrap();
    assert_eq!(epictrl(&["simulate", extra.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]), 1);
    assert_eq!(epictrl(&["simulate", "missing.toml", "--out", tmp.path().to_str().unwrap()]), 1);
}

#[test]
fn infeasible_start_fails_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("italy-2020.toml")).unwrap();
    let path = tmp.path().join("late.toml");
    fs::write(&path, text.replace("i0 = 0.001", "i0 = 0.02")).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(epictrl(&["greedy", path.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert_eq!(epictrl(&["optimize", path.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert_eq!(epictrl(&["viability", path.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    assert_eq!(read_json(&out.join("report.json"))["zone"], "Infeasible");
}

#[test]
fn fixtures_match_presets() {
    for name in epictrl::PRESETS {
        let file = epictrl::Scenario::load(Path::new(&fixture(&format!("{name}.toml")))).unwrap();
        assert_eq!(file, epictrl::Scenario::preset(name).unwrap());
    }
}
