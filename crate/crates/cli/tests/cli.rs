use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn roadtest(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadtest")).args(args).current_dir(cwd).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two short curve variants taken from the stock radius sweep.
fn definitions(dir: &Path) {
    let stock = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../definitions/curved-left-radius.toml")).unwrap();
    let line = stock.lines().find(|l| l.starts_with("variants")).unwrap();
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("bend.toml"), stock.replace(line, "variants = 2")).unwrap();
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = roadtest(&["simulate", "--frobnicate"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = roadtest(&["--help"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_config_stops_before_generate() {
    let tmp = tempfile::tempdir().unwrap();
    definitions(&tmp.path().join("defs"));
    fs::write(tmp.path().join("bad.toml"), "dt = -0.01\n").unwrap();
    let o = roadtest(&["pipeline", "--definitions", "defs", "--config", "bad.toml", "--db", "db"], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad.toml"), "{}", stderr(&o));
    assert!(!tmp.path().join("db").exists());

    fs::write(tmp.path().join("typo.toml"), "paralel = 2\n").unwrap();
    let o = roadtest(&["generate", "--definitions", "defs", "--config", "typo.toml", "--db", "db"], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!tmp.path().join("db").exists());

    let o = roadtest(&["generate", "--definitions", "defs", "--filter", "[", "--db", "db"], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn stage_failures_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("empty")).unwrap();
    let o = roadtest(&["generate", "--definitions", "empty", "--db", "db"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("generate failed"), "{}", stderr(&o));

    let o = roadtest(&["report", "--db", "db"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("report failed"), "{}", stderr(&o));
}

#[test]
fn pipeline_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    definitions(&tmp.path().join("defs"));
    fs::write(tmp.path().join("run.toml"), "parallel = 1\noutput = \"campaign\"\n").unwrap();
    let o = roadtest(&["pipeline", "--definitions", "defs", "--config", "run.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("generated 2 scenarios"), "{out}");
    assert!(out.contains("Evaluated scenarios"), "{out}");
    let db = tmp.path().join("campaign");
    assert!(db.join("spider.svg").is_file() && db.join("report.txt").is_file());

    let o = roadtest(&["verify", "--db", "campaign"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    fs::remove_file(db.join("manifest.json")).unwrap();
    let o = roadtest(&["simulate", "--db", "campaign"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("simulate failed"), "{}", stderr(&o));
}
