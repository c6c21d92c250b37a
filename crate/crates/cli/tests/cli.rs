use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parampass"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn missing_manifest_is_an_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["fit", "--data", "nowhere/manifest.json", "--order", "2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere/manifest.json"));
}

#[test]
fn passive_toy_checks_clean() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["synth", "--kind", "single-pole", "--value", "0.5", "--model", "m.json"])), 0);
    let o = run(d, &["check", "--model", "m.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(csv_rows(&d.join("violations.csv")).is_empty());
    let psi = csv_rows(&d.join("psi.csv"));
    assert!(psi.iter().all(|r| r[1].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn linear_toy_reports_violations_above_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["synth", "--kind", "linear", "--model", "m.json"])), 0);
    let o = run(d, &["check", "--model", "m.json"]);
    assert_eq!(code(&o), 1);
    let rows = csv_rows(&d.join("violations.csv"));
    assert!(!rows.is_empty());
    for r in &rows {
        let theta: f64 = r[0].parse().unwrap();
        let sigma: f64 = r[4].parse().unwrap();
        assert!(theta > 1.0);
        assert!((sigma - theta).abs() <= 1e-6);
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn json_report_format() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--kind", "linear", "--model", "m.json"]);
    let o = run(d, &["check", "--model", "m.json", "--format", "json", "--violations", "rep"]);
    assert_eq!(code(&o), 1);
    let back = parampass::report::import_report_json(d.join("rep.json")).unwrap();
    assert!(!back.violations.is_empty());
}

#[test]
fn enforce_shallow_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(d, &["synth", "--kind", "shallow", "--seed", "1", "--model", "m.json", "--data", "data/set.json"]);
    assert_eq!(code(&o), 0);
    let o = run(d, &["enforce", "--model", "m.json", "--data", "data/set.json", "--split", "all"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let log = csv_rows(&d.join("enforce_log.csv"));
    let sig: Vec<f64> = log.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(sig.windows(2).all(|w| w[1] < w[0]), "{sig:?}");
    assert!(*sig.last().unwrap() <= 1.0);
    assert!(csv_rows(&d.join("violations.csv")).is_empty());
    let psi = csv_rows(&d.join("psi.csv"));
    assert!(psi.iter().all(|r| r[1].parse::<f64>().unwrap() > 0.0));
    let o = run(d, &["validate", "--model", "passive_model.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn enforce_leaves_passive_model_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--kind", "random", "--value", "0.9", "--seed", "4", "--model", "m.json", "--data", "d.json"]);
    let o = run(d, &["enforce", "--model", "m.json", "--data", "d.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(d.join("m.json")).unwrap(), fs::read(d.join("passive_model.json")).unwrap());
}

#[test]
fn eval_single_point_and_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--kind", "single-pole", "--value", "2", "--model", "m.json"]);
    let o = run(d, &["eval", "--model", "m.json", "--freq", "0", "--theta", "0.5", "--infinity"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&d.join("eval.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 2.0);
    assert_eq!(rows[1][0], "inf");
    assert_eq!(rows[1][3].parse::<f64>().unwrap(), 0.0);
    let o = run(d, &["eval", "--model", "m.json", "--freq", "0", "--theta", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&d.join("eval.csv"))[0][2], "1");
}

#[test]
fn fit_in_class_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--kind", "linear", "--model", "gen.json", "--data", "d.json"]);
    let o = run(d, &["fit", "--data", "d.json", "--order", "1", "--param-terms", "2", "--split", "all"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&d.join("fit_report.csv"));
    let worst = rows.iter().find(|r| r[0] == "worst").unwrap();
    assert!(worst[1].parse::<f64>().unwrap() <= 1e-8);
    assert!(d.join("model.json").exists() && d.join("gsk_log.csv").exists());
}

#[test]
fn check_exit_code_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for seed in 0..20u64 {
        let peak = if seed % 2 == 0 { "0.95" } else { "1.1" };
        let s = seed.to_string();
        run(d, &["synth", "--kind", "random", "--value", peak, "--seed", &s, "--ports", "2", "--model", "m.json"]);
        let check = code(&run(d, &["check", "--model", "m.json"]));
        let valid = run(d, &["validate", "--model", "m.json", "--oracle-nf", "2048", "--oracle-ntheta", "51"]);
        let out = String::from_utf8_lossy(&valid.stdout);
        let oracle_pass = out.contains("oracle: PASS");
        assert_eq!(oracle_pass, check == 0, "seed {seed}: {out}");
        assert_eq!(code(&valid), check);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(d, &["synth", "--kind", "random", "--value", "1.2", "--seed", "9", "--model", "m.json"]);
    run(d, &["check", "--model", "m.json", "--violations", "a.csv", "--psi", "pa.csv"]);
    run(d, &["check", "--model", "m.json", "--violations", "b.csv", "--psi", "pb.csv"]);
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    assert_eq!(fs::read(d.join("pa.csv")).unwrap(), fs::read(d.join("pb.csv")).unwrap());
}
