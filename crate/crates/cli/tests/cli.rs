use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_widom-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("widom-lab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn green_single_writes_all_formats() {
    let out = scratch("green");
    let st = bin().args(["green", "--set", "single", "--formats", "json,csv,svg", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    for f in ["green.json", "green-critical.csv", "green-density.csv", "green-density.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("green.json")).unwrap()).unwrap();
    assert_eq!(doc["result"]["green"]["widom_sum"], serde_json::json!(0.0));
    assert_eq!(doc["config"]["set"], "single");
    assert!(doc["truncation"]["quad"].is_object());
    assert_eq!(doc["determinism_hash"].as_str().unwrap().len(), 64);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn input_file_round_trips() {
    let out = scratch("input");
    std::fs::create_dir_all(&out).unwrap();
    let p = out.join("set.json");
    std::fs::write(&p, r#"{"intervals": [[-2, -1], [1, 2]]}"#).unwrap();
    let st = bin().args(["green", "--formats", "json", "--input"]).arg(&p).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("green.json")).unwrap()).unwrap();
    assert!(doc["result"]["green"]["critical_points"][0].as_f64().unwrap().abs() < 1e-10);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn schema_errors_exit_with_one() {
    let out = scratch("bad");
    std::fs::create_dir_all(&out).unwrap();
    let p = out.join("bad.json");
    std::fs::write(&p, r#"{"intervals": [[0, 2], [1, 3]]}"#).unwrap();
    let code = |args: &[&str]| bin().args(args).arg("--out").arg(&out).status().unwrap().code();
    assert_eq!(code(&["green", "--input", p.to_str().unwrap()]), Some(1));
    assert_eq!(code(&["green", "--set", "no_such_family"]), Some(1));
    assert_eq!(code(&["green"]), Some(1));
    assert_eq!(code(&["green", "--set", "single", "--formats", "pdf"]), Some(1));
    let _ = std::fs::remove_dir_all(&out);
}
