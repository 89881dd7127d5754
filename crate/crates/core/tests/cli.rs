use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cpdzip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpdzip")).args(args).output().expect("binary runs")
}

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"order":2,"dim":0,"components":1,"alphabets":[[1,-1],[0,1]],"dists":[[["1/2","1/2"]],[["1","0"]]]}"#,
    )
    .unwrap();
    let out = cpdzip(&["validate", "--model", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);
    assert!(v["violations"].as_array().unwrap().len() >= 3, "{v}");

    let out = cpdzip(&["validate", "--model", s(&models().join("example1.json"))]);
    assert!(out.status.success());
}

#[test]
fn sample_encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = models().join("rank_one_uniform.json");
    let (sample, cw) = (dir.path().join("s.json"), dir.path().join("c.bin"));
    assert!(cpdzip(&["sample", "--model", s(&model), "--seed", "3", "--trial", "4", "--out", s(&sample)]).status.success());
    assert!(cpdzip(&["encode", "--model", s(&model), "--gamma", "1/10", "--tensor", s(&sample), "--out", s(&cw)])
        .status
        .success());
    let out = cpdzip(&["decode", "--model", s(&model), "--codeword", s(&cw)]);
    assert!(out.status.success());
    let decoded: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let sampled: serde_json::Value = serde_json::from_slice(&std::fs::read(&sample).unwrap()).unwrap();
    assert_eq!(decoded, sampled["tensor"]);

    // another model's codebook refuses the codeword
    let other = models().join("rank_one_skewed.json");
    let out = cpdzip(&["decode", "--model", s(&other), "--codeword", s(&cw)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model hash"));
}

#[test]
fn count_and_krank() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, r#"{"order":3,"dim":3,"entries":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}"#)
        .unwrap();
    let out = cpdzip(&["count", "--model", s(&models().join("example1.json")), "--tensor", s(&zero)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"], 8);
    assert_eq!(v["probability"], "343/1728");

    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"[[1,1,0],[1,1,1],[0,0,"1/2"]]"#).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&cpdzip(&["krank", "--matrix", s(&m)]).stdout).unwrap();
    assert_eq!((v["rank"].as_u64(), v["kruskal_rank"].as_u64()), (Some(2), Some(1)));
}

#[test]
fn verify_examples_passes() {
    let out = cpdzip(&["verify-examples"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 17);
}

#[test]
fn experiment_writes_identical_files_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"model":"{}","kind":"full-rank","n_grid":[2,3],"trials":500,"seed":9,"output":"r.csv"}}"#,
            s(&models().join("two_component.json"))
        ),
    )
    .unwrap();
    assert!(cpdzip(&["experiment", "--config", s(&cfg)]).status.success());
    let first = (std::fs::read(dir.path().join("r.csv")).unwrap(), std::fs::read(dir.path().join("r.json")).unwrap());
    assert!(cpdzip(&["experiment", "--config", s(&cfg)]).status.success());
    let second = (std::fs::read(dir.path().join("r.csv")).unwrap(), std::fs::read(dir.path().join("r.json")).unwrap());
    assert_eq!(first, second);
}
