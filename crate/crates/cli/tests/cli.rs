use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use multidx_core::pipeline::PredictionResult;
use multidx_core::{Mode, Preset};
use serde_json::Value;

mod common;
use common::*;

fn multidx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multidx")).args(args).env_remove("MULTIDX_MODEL_DIR").output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_blood5(dir: &Path, name: &str, seed: &str) -> Output {
    let out = dir.join(name);
    multidx(&["train", "--experiment", "exp32", "--data", s(&dir.join("blood.csv")), "--out", s(&out), "--seed", seed, "--forest-trees", "10"])
}

#[test]
fn train_prints_table_and_writes_artifact() {
    let dir = tempfile::tempdir().unwrap();
    write_tabular_csv(&dir.path().join("blood.csv"), Preset::by_id("exp32").unwrap(), 80, 1);
    let report = dir.path().join("report.json");
    let out = multidx(&[
        "train", "--experiment", "exp32", "--data", s(&dir.path().join("blood.csv")), "--out", s(&dir.path().join("m/b5.mdx")),
        "--forest-trees", "10", "--report", s(&report),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = text(&out.stdout);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("exp32 (blood5)"), "{table}");
    assert!(lines[1].contains("Accuracy") && lines[1].contains("F1-score"));
    let learners: Vec<&str> = lines[2..].iter().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(learners.last(), Some(&"Stacked"));
    assert_eq!(learners.len(), 4);
    assert!(dir.path().join("m/b5.mdx").is_file());
    let json: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json[0]["experiment"], "exp32");
    assert_eq!(json[0]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn fixed_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_tabular_csv(&dir.path().join("blood.csv"), Preset::by_id("exp32").unwrap(), 80, 2);
    let a = train_blood5(dir.path(), "a.mdx", "9");
    let b = train_blood5(dir.path(), "b.mdx", "9");
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read(dir.path().join("a.mdx")).unwrap(), std::fs::read(dir.path().join("b.mdx")).unwrap());
}

#[test]
fn schema_mismatch_names_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("blood.csv");
    write_tabular_csv(&csv, Preset::by_id("exp32").unwrap(), 40, 1);
    let body = std::fs::read_to_string(&csv).unwrap().replacen("Platelets", "PLT", 1);
    std::fs::write(&csv, body).unwrap();
    let out = train_blood5(dir.path(), "x.mdx", "0");
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("Platelets"), "{}", text(&out.stderr));
    assert!(!dir.path().join("x.mdx").exists());
}

#[test]
fn sidecar_schema_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("blood.csv");
    write_tabular_csv(&csv, Preset::by_id("exp32").unwrap(), 60, 3);
    let body = std::fs::read_to_string(&csv).unwrap();
    let body = body.replacen(",label", ",outcome", 1).replace("COVID-negative", "neg").replace("COVID-positive", "pos");
    std::fs::write(&csv, body).unwrap();
    let schema = r#"{"feature_names":["Age","TWBC","Eosinophils","Monocytes","Platelets"],
        "feature_kinds":["numeric","numeric","numeric","numeric","numeric"],
        "label_name":"outcome","class_names":["neg","pos"]}"#;
    std::fs::write(dir.path().join("blood.schema.json"), schema).unwrap();
    assert!(train_blood5(dir.path(), "a.mdx", "0").status.success());
    std::fs::remove_file(dir.path().join("blood.schema.json")).unwrap();
    let out = train_blood5(dir.path(), "b.mdx", "0");
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    let out = multidx(&[
        "train", "--experiment", "exp32", "--data", s(&csv), "--out", s(&dir.path().join("c.mdx")), "--label", "outcome",
        "--classes", "neg,pos", "--forest-trees", "10",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(multidx(&[]).status.code(), Some(1));
    assert_eq!(multidx(&["train", "--experiment", "exp32"]).status.code(), Some(1));
    assert_eq!(multidx(&["frobnicate"]).status.code(), Some(1));
    let out = multidx(&["train", "--experiment", "exp99", "--data", "x.csv", "--out", "x.mdx"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("exp32"));
    let out = multidx(&["train", "--experiment", "exp32", "--data", "x.csv", "--out", "x.mdx", "--resolution", "64"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(multidx(&["--help"]).status.code(), Some(0));
}

#[test]
fn predict_matches_library_and_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("b5.mdx");
    write_tabular_csv(&dir.path().join("blood.csv"), Preset::by_id("exp32").unwrap(), 60, 4);
    assert!(train_blood5(dir.path(), "b5.mdx", "1").status.success());

    let request = dir.path().join("req.json");
    std::fs::write(&request, r#"{"inputs":{"Age":61,"TWBC":7.2,"Eosinophils":0.1,"Monocytes":0.6,"Platelets":180}}"#).unwrap();
    let out = multidx(&["predict", s(&model), s(&request)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let parsed: PredictionResult = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<String> = serde_json::from_slice::<serde_json::Map<String, Value>>(&out.stdout).unwrap().keys().cloned().collect();
    assert_eq!(keys, ["label", "latency_ms", "mode", "model_version", "probability_positive"]);
    assert_eq!(parsed.mode, Mode::Blood5);

    let artifact = multidx_core::modelstore::load(&model).unwrap();
    let fields = [("Age", 61.0), ("TWBC", 7.2), ("Eosinophils", 0.1), ("Monocytes", 0.6), ("Platelets", 180.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), Some(v)))
        .collect();
    let direct = multidx_core::pipeline::predict(&artifact, &multidx_core::pipeline::ModeInput::Fields(fields)).unwrap()[1];
    assert_eq!(parsed.probability_positive.to_bits(), direct.to_bits());

    let out = multidx(&["predict", s(&dir.path().join("nope.mdx")), s(&request)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("nope.mdx"));

    std::fs::write(dir.path().join("scan.png"), b"not a png").unwrap();
    let out = multidx(&["predict", s(&model), s(&dir.path().join("scan.png"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("blood5"));

    std::fs::write(&request, r#"{"inputs":{"Age":61}}"#).unwrap();
    let out = multidx(&["predict", s(&model), s(&request)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("Platelets"));
}

#[test]
fn raman_resolution_sweep_writes_one_artifact_per_side() {
    let dir = tempfile::tempdir().unwrap();
    write_spectra_csv(&dir.path().join("raman.csv"), 30, 80, 1);
    let out = multidx(&[
        "train", "--experiment", "exp4", "--data", s(&dir.path().join("raman.csv")), "--out", s(&dir.path().join("raman.mdx")),
        "--resolution", "16,24", "--epochs", "1",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = text(&out.stdout);
    assert!(table.contains("16x16") && table.contains("24x24"), "{table}");
    assert_eq!(table.lines().count(), 4);
    for side in [16, 24] {
        assert!(dir.path().join(format!("raman-r{side}.mdx")).is_file());
        let hist = std::fs::read_to_string(dir.path().join(format!("raman-r{side}.history.csv"))).unwrap();
        assert_eq!(hist.lines().count(), 2);
    }
}

#[test]
fn image_and_audio_directories_train_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    write_report_dirs(&dir.path().join("ecg"), Preset::by_id("exp5").unwrap(), 20, 1);
    let out = multidx(&[
        "train", "--experiment", "exp5", "--data", s(&dir.path().join("ecg")), "--out", s(&dir.path().join("ecg.mdx")),
        "--resolution", "16", "--epochs", "1",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let png = std::fs::read_dir(dir.path().join("ecg/COVID-positive")).unwrap().next().unwrap().unwrap().path();
    let out = multidx(&["predict", s(&dir.path().join("ecg.mdx")), s(&png)]);
    assert!(out.status.success(), "{}", text(&out.stderr));

    write_cough_dirs(&dir.path().join("cough"), Preset::by_id("exp2").unwrap(), 30, 1);
    let out = multidx(&[
        "train", "--experiment", "exp2", "--data", s(&dir.path().join("cough")), "--out", s(&dir.path().join("cough.mdx")),
        "--forest-trees", "10",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let wav = std::fs::read_dir(dir.path().join("cough/COVID-negative")).unwrap().next().unwrap().unwrap().path();
    let out = multidx(&["predict", s(&dir.path().join("cough.mdx")), s(&wav)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let r: PredictionResult = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.mode, Mode::Cough);
}

fn http_get(port: u16, path: &str) -> Option<Value> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    stream.read_to_string(&mut buf).ok()?;
    serde_json::from_str(buf.split_once("\r\n\r\n")?.1).ok()
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[cfg(unix)]
#[test]
fn serve_reports_health_and_drains_on_sigterm() {
    let dir = tempfile::tempdir().unwrap();
    write_tabular_csv(&dir.path().join("blood.csv"), Preset::by_id("exp32").unwrap(), 60, 5);
    std::fs::create_dir(dir.path().join("models")).unwrap();
    assert!(train_blood5(dir.path(), "models/blood5.mdx", "0").status.success());

    for (model_dir, expected) in [(dir.path().join("empty"), "degraded"), (dir.path().join("models"), "ok")] {
        std::fs::create_dir_all(&model_dir).unwrap();
        let port = free_port();
        let mut child = Command::new(env!("CARGO_BIN_EXE_multidx"))
            .args(["serve", "--port", &port.to_string(), "--model-dir", s(&model_dir)])
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        let start = Instant::now();
        let health = loop {
            if let Some(v) = http_get(port, "/v1/health") {
                break v;
            }
            assert!(start.elapsed() < Duration::from_secs(20), "server did not start");
            std::thread::sleep(Duration::from_millis(50));
        };
        assert_eq!(health["result"]["status"], expected);
        if expected == "ok" {
            assert_eq!(health["result"]["models"][0]["mode"], "blood5");
            let busy = multidx(&["serve", "--port", &port.to_string()]);
            assert_eq!(busy.status.code(), Some(3), "{}", text(&busy.stderr));
        }
        Command::new("kill").args(["-TERM", &child.id().to_string()]).status().unwrap();
        let status = child.wait().unwrap();
        assert!(status.success());
        let mut err = String::new();
        child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
        assert!(err.contains("shut down"), "{err}");
    }
}
