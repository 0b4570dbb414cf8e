use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lcsurv::io::{read_dataset_path, FitReport};
use lcsurv::model::mixture_loglik;

fn lcsurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcsurv")).args(args).output().unwrap()
}

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_report(path: &Path) -> FitReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_csv_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.csv");
    std::fs::write(&input, "").unwrap();
    let out = lcsurv(&["fit", "-i", s(&input), "--no-se"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn malformed_row_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "time,status,x1\n1.0,1,0.5\n2.0,1,abc\n3.0,0,0.1\n").unwrap();
    let out = lcsurv(&["fit", "-i", s(&input), "-L", "1", "--no-se"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let out = lcsurv(&["simulate", "VI", "-n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("VI"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(lcsurv(&[]).status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sim.csv");
    let out = lcsurv(&["simulate", "I", "-n", "200", "--seed", "4", "-o", s(&data)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reports = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("fit{k}.json"));
        let out = lcsurv(&[
            "fit", "-i", s(&data), "-o", s(&path), "--seed", "9", "--init", "random", "--starts", "3", "--no-se",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timestamp");
        v.as_object_mut().unwrap().remove("input");
        reports.push(v);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn saved_fit_rescores_to_its_loglik() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sim.csv");
    assert!(lcsurv(&["simulate", "II", "-n", "300", "--seed", "1", "-o", s(&data)]).status.success());
    let path = dir.path().join("fit.json");
    let out = lcsurv(&["fit", "-i", s(&data), "-o", s(&path), "-L", "2", "--seed", "1", "--standardize"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_report(&path);
    assert!(report.estimates.iter().all(|e| e.se.is_some_and(f64::is_finite)));
    let prepared = report.prepare(&read_dataset_path(&data).unwrap()).unwrap();
    let rescored = mixture_loglik(&prepared, &report.parameters().unwrap(), &report.model_config().unwrap()).unwrap();
    assert!((rescored - report.loglik).abs() < 1e-9, "{rescored} vs {}", report.loglik);
}

#[test]
fn single_class_fit_matches_packaged_cox() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cox.json");
    let out = lcsurv(&["fit", "-i", s(&data_path("toy50.csv")), "-o", s(&path), "-L", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_report(&path);
    let golden: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data_path("toy50_cox.json")).unwrap()).unwrap();
    for (k, e) in report.estimates.iter().enumerate() {
        assert!((e.value - golden["coefficients"][k].as_f64().unwrap()).abs() < 1e-6);
        let se = e.se.unwrap();
        let reference = golden["standard_errors"][k].as_f64().unwrap();
        // outer-product standard errors on 50 subjects; loose agreement only
        assert!((se / reference - 1.0).abs() < 0.5, "{se} vs {reference}");
    }
    assert_eq!(report.baseline.len(), golden["event_times"].as_array().unwrap().len());
}

#[test]
fn predict_writes_a_curve_per_subject() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("fit.json");
    let toy = data_path("toy50.csv");
    assert!(lcsurv(&["fit", "-i", s(&toy), "-o", s(&model), "-L", "2", "--no-se", "--seed", "3"]).status.success());
    let pred = dir.path().join("pred.csv");
    let out = lcsurv(&["predict", "-m", s(&model), "-i", s(&toy), "-o", s(&pred), "--times", "0,1,2,3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(&pred).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len() % 50, 0);
    assert!(!rows.is_empty());
    for row in &rows {
        let v: f64 = row[row.len() - 1].parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn select_and_cv_brier_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sim.csv");
    assert!(lcsurv(&["simulate", "I", "-n", "300", "--seed", "2", "-o", s(&data)]).status.success());
    let table = dir.path().join("select.csv");
    let out = lcsurv(&["select", "-i", s(&data), "-o", s(&table), "-L", "1,2", "--seed", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(csv::Reader::from_path(&table).unwrap().records().count(), 2);
    let brier = dir.path().join("brier.csv");
    let out = lcsurv(&["cv-brier", "-i", s(&data), "-o", s(&brier), "--seed", "2", "--step", "0.5", "--upper", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(brier.with_extension("meta.json").exists() || dir.path().join("brier.csv.meta.json").exists());
}

#[test]
fn reproduce_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcsurv(&[
        "reproduce", "estimation", "I", "-n", "200", "-r", "3", "--no-se", "--seed", "5", "--out-dir", s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.ends_with("_estimation.csv")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with("manifest.json")), "{names:?}");
}

#[test]
fn argument_definitions_are_consistent() {
    use clap::CommandFactory;
    lcsurv::cli::Cli::command().debug_assert();
}
