use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tworv::bivariate::BivariateParams;

fn tworv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tworv"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn unknown_subcommand_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = tworv(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("frobnicate"));
}

#[test]
fn sample_csv_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sample", "--seed", "7", "--format", "csv", "--out", "a.csv", "lambda=1.5", "M1=1", "sigma1=1",
        "sigma2=0.1", "n=250",
    ];
    assert!(tworv(dir.path(), &args).status.success());
    let mut again = args;
    again[6] = "b.csv";
    let o = tworv(dir.path(), &again);
    assert!(o.status.success());
    assert!(stderr(&o).contains("seed = 7"));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,w");
    assert_eq!(lines.len(), 251);
    for (i, line) in lines[1..].iter().enumerate() {
        let (idx, w) = line.split_once(',').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), i);
        let digits = w.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(digits.len(), 17, "{w}");
        assert!(w.parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn default_seed_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = tworv(dir.path(), &["sample", "lambda=1.5", "M1=1", "sigma1=1", "sigma2=0.1", "n=3"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("seed = 42"));
    assert_eq!(json(&o)["seed"], 42);
}

#[test]
fn parameter_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = BivariateParams::new(1.37, 0.8123456789012345, 1.1, 0.07).unwrap();
    let path = dir.path().join("p.json");
    fs::write(&path, serde_json::to_string_pretty(&p).unwrap()).unwrap();
    let back: BivariateParams = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, p);
    let o = tworv(dir.path(), &["moments", "--params", "p.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let echoed: BivariateParams = serde_json::from_value(v["params"].clone()).unwrap();
    assert_eq!(echoed, p);
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.json"), r#"{"M1": 1.0, "sigma1": 1.0, "sigma2": 0.1}"#).unwrap();
    let o = tworv(dir.path(), &["sample", "--params", "p.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda"), "{}", stderr(&o));
}

#[test]
fn malformed_file_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.json"), "{\n  \"lambda\": 1.5,\n  \"M1\": oops\n}\n").unwrap();
    let o = tworv(dir.path(), &["sample", "--params", "p.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 3") && e.contains("column"), "{e}");
}

#[test]
fn overrides_win_over_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.json"), r#"{"lambda": 1.5, "M1": 1, "sigma1": 1, "sigma2": 0.1}"#).unwrap();
    let o = tworv(dir.path(), &["moments", "--params", "p.json", "lambda=1.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&o)["params"]["lambda"], 1.2);
}

#[test]
fn fit_and_map_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = tworv(dir.path(), &["fit", "--mean", "1", "--var", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((json(&o)["fit"]["lambda"].as_f64().unwrap() - 1.0).abs() < 0.05);

    let o = tworv(dir.path(), &["map", "weibull", "b=1", "c=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert!(v["deviation"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["mapping"]["params"]["alpha1"], -1.0);

    let o = tworv(dir.path(), &["verify"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["all_pass"], true);
    assert_eq!(stderr(&o).matches("PASS").count(), 14);
}

#[test]
fn pdf_of_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = tworv(dir.path(), &["pdf", "--preset", "exponential", "--z", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = json(&o)["points"][0]["pdf"].as_f64().unwrap();
    assert!((f - (-1.0f64).exp()).abs() < 1e-12);
    let o = tworv(dir.path(), &["pdf", "--preset", "normal", "--z", "-1"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn writes_only_the_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = tworv(
        dir.path(),
        &["compound", "p=0.5", "n=100", "--seed", "1", "--out", "s.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec![std::ffi::OsString::from("s.json")]);
    assert!(o.stdout.is_empty());
}

#[test]
fn infeasible_and_invalid_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = tworv(dir.path(), &["fit", "mean=1", "var=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
    let o = tworv(dir.path(), &["fit", "mean=1000000", "var=0.001"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("infeasible"));
    let o = tworv(dir.path(), &["sample", "lambda=3", "M1=1", "sigma1=1", "sigma2=0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda"));
}
