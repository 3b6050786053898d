use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn locality(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locality")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    locality(args).status.code().expect("exit code")
}

fn path(name: &str) -> String {
    data(name).to_str().unwrap().to_string()
}

#[test]
fn check_passes_on_the_corpus() {
    for name in ["s4.json", "s3_p3.json", "a4.json", "d8.json", "q8.json", "inversion_torus.json"] {
        assert_eq!(code(&["check", &path(name)]), 0, "{name}");
    }
}

#[test]
fn deleted_word_fails_with_witness() {
    let out = locality(&["check", &path("s4_removed_word.json")]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[FAIL] objectivity / (O1)"));
    assert!(text.contains("witness:"));
}

#[test]
fn roundtrip_exit_codes() {
    assert_eq!(code(&["roundtrip", &path("s4.json")]), 0);
    assert_eq!(code(&["roundtrip", &path("s3_p3.json")]), 0);
    let out = locality(&["roundtrip", &path("s4_missing_radical.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("objects are the centrics"));
}

#[test]
fn fusion_structured_output() {
    let out = locality(&["--structured", "fusion", &path("s4.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "fusion");
    assert_eq!(v["outcome"], "pass");
    assert_eq!(v["data"]["orbits"].as_array().unwrap().len(), 7);
    assert_eq!(v["data"]["centric_radicals"].as_array().unwrap().len(), 2);
}

#[test]
fn rebuild_emits_a_locality() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("rebuilt.json");
    let t = target.to_str().unwrap();
    assert_eq!(code(&["rebuild", &path("s4_transporter.json"), "-o", t]), 0);
    assert_eq!(code(&["check", t]), 0);
    assert_eq!(code(&["roundtrip", t]), 0);

    let out = locality(&["rebuild", &path("s3_p3_transporter.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("carrier").is_some());
}

#[test]
fn rebuild_rejects_broken_composition() {
    let out = locality(&["rebuild", &path("s4_transporter_broken.json")]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[FAIL] reconstruction / bullet on morphisms"));
    assert!(text.contains("witness:"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"group\": 1").unwrap();
    assert_eq!(code(&["check", bad.to_str().unwrap()]), 2);
    assert_eq!(code(&["check", "/nonexistent/file.json"]), 2);
    assert_eq!(code(&["--prime", "3", "check", &path("s4.json")]), 2);
    assert_eq!(code(&["--prime", "4", "check", &path("s4.json")]), 2);
    assert_eq!(code(&["--truncation", "0", "check", &path("inversion_torus.json")]), 2);
    assert_eq!(code(&["--max-word-len", "0", "check", &path("s4.json")]), 2);
    assert_eq!(code(&["--budget", "0", "check", &path("s4.json")]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn flags_change_depth_and_truncation() {
    let out = locality(&["--max-word-len", "2", "check", &path("s4.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("up to length 2"));
    let out = locality(&["--structured", "--truncation", "2", "fusion", &path("inversion_torus.json")]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["data"]["truncation"], 2);
}

#[test]
fn status_codes() {
    use compact_locality::cli::exit_code;
    use compact_locality::report::Status;
    assert_eq!(exit_code(Status::Pass), 0);
    assert_eq!(exit_code(Status::Fail), 1);
    assert_eq!(exit_code(Status::Inconclusive), 3);
}
