use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(args)
        .env("DIL_LOG", "quiet")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gen_small(dir: &Path) {
    let out = dce(&[
        "gen",
        "--out",
        dir.to_str().unwrap(),
        "--domains",
        "3",
        "--classes",
        "6",
        "--dim",
        "8",
        "--rho",
        "10",
        "--n-max",
        "150",
        "--test-per-class",
        "10",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

const FAST: [&str; 6] = ["--epochs-stage1", "3", "--epochs-stage2", "2", "--k", "16"];

#[test]
fn gen_writes_manifest_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dce(&[
        "gen",
        "--out",
        dir.path().to_str().unwrap(),
        "--domains",
        "3",
        "--classes",
        "20",
        "--dim",
        "16",
        "--rho",
        "100",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("manifest.json").exists());
    let features = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".dilf")
        })
        .count();
    assert_eq!(features, 6);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("rho=100.00"), "{summary}");
}

#[test]
fn gen_is_idempotent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_small(a.path());
    gen_small(b.path());
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap()
        );
    }
}

#[test]
fn invalid_rho_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dce(&["gen", "--out", dir.path().to_str().unwrap(), "--rho", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("rho must be ≥ 1"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn unknown_flag_exits_one_and_help_exits_zero() {
    let out = dce(&["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out).trim_end().lines().count(), 1);
    assert_eq!(dce(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_reports_and_compares() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let manifest = dir.path().join("manifest.json");
    let mut reports = Vec::new();
    for method in ["dce", "shared", "domain", "prototype"] {
        let report = dir.path().join(format!("{method}.json"));
        let mut args = vec![
            "train",
            "--data",
            manifest.to_str().unwrap(),
            "--method",
            method,
            "--seed",
            "7",
            "--out",
            report.to_str().unwrap(),
        ];
        args.extend(FAST);
        let out = dce(&args);
        assert!(out.status.success(), "{method}: {}", stderr(&out));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["method"], method);
        assert_eq!(json["stages"].as_array().unwrap().len(), 3);
        for key in ["A_bar", "A_B", "A_many", "A_med", "A_few", "cpd", "config"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        reports.push(report);
    }

    let paths: Vec<&str> = reports.iter().map(|p| p.to_str().unwrap()).collect();
    let mut args = vec!["report", "--format", "csv"];
    args.extend(&paths);
    let out = dce(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("method,runs,A_bar_mean,A_bar_std,A_B_mean"));
    assert_eq!(lines.len(), 5);
    let header_cols = lines[0].split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == header_cols));
    // one run per method: std column is 0
    assert_eq!(lines[1].split(',').nth(3), Some("0"));
}

#[test]
fn report_aggregates_seeds() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let manifest = dir.path().join("manifest.json");
    let mut paths = Vec::new();
    for seed in ["1", "2", "3"] {
        let report = dir.path().join(format!("shared_{seed}.json"));
        let mut args = vec![
            "train",
            "--data",
            manifest.to_str().unwrap(),
            "--method",
            "shared",
            "--seed",
            seed,
            "--out",
            report.to_str().unwrap(),
        ];
        args.extend(FAST);
        assert!(dce(&args).status.success());
        paths.push(report.to_str().unwrap().to_string());
    }
    let mut args = vec!["report"];
    args.extend(paths.iter().map(String::as_str));
    let out = dce(&args);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2, "{text}");
    assert!(rows[1].starts_with("shared") && rows[1].contains('±'));
}

#[test]
fn report_rejects_foreign_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.json");
    fs::write(&path, r#"{"method": "dce", "unexpected": true}"#).unwrap();
    let out = dce(&["report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn four_alphas_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let ckpt = dir.path().join("model");
    let manifest = dir.path().join("manifest.json");
    let mut args = vec![
        "train",
        "--data",
        manifest.to_str().unwrap(),
        "--alphas",
        "0,1,2,3",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ];
    args.extend(FAST);
    let out = dce(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        report["config"]["alphas"],
        serde_json::json!([0.0, 1.0, 2.0, 3.0])
    );
    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ckpt.join("index.json")).unwrap()).unwrap();
    assert_eq!(index["experts"].as_array().unwrap().len(), 12);
    assert_eq!(index["selector"]["outputs"], 12);
    assert!(ckpt.join("repo.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"data": "{}", "method": "shared", "seed": 3, "k": 8, "epochs_stage1": 2, "epochs_stage2": 1}}"#,
            dir.path().join("manifest.json").display()
        ),
    )
    .unwrap();
    let out = dce(&["train", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["method"], "shared");
    assert_eq!(report["seed"], 9);
    assert_eq!(report["config"]["k"], 8);

    fs::write(&cfg, r#"{"seed": 1, "learning_rate": 0.1}"#).unwrap();
    let out = dce(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let manifest = dir.path().join("manifest.json");
    let mut args = vec![
        "train",
        "--data",
        manifest.to_str().unwrap(),
        "--cov-min-samples",
        "1000",
    ];
    args.extend(FAST);
    let out = dce(&args);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("insufficient data for domain covariance"),
        "{err}"
    );
    assert_eq!(err.trim_end().lines().count(), 1);

    let missing = dir.path().join("nope.json");
    let out = dce(&["train", "--data", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
