use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn kmfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmfix")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rates_prints_h() {
    let o = kmfix(&["rates", "--config", config("rates.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "h = 30"));
    assert!(stdout(&o).lines().any(|l| l == "g = 30"));
}

#[test]
fn iterate_writes_a_four_row_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = kmfix(&["iterate", "--config", config("iterate_translation.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("1.0000000000000000e0")));
}

#[test]
fn axioms_exit_codes() {
    let ok = kmfix(&["axioms", "--config", config("axioms_poincare.json").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let broken = kmfix(&["axioms", "--config", config("axioms_broken.json").to_str().unwrap()]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(stdout(&broken).contains("(W2)       FAIL"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"space": {"a": 0, "b": 1}}"#).unwrap();
    assert_eq!(kmfix(&["axioms", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn product_is_deterministic_and_reports_exhaustion() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = ["a.json", "b.json"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let o = kmfix(&["product", "--config", config("diagonal_product.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0));
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
    let o = kmfix(&["product", "--config", config("escaping_product.json").to_str().unwrap(), "--budget", "100"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn uafpp_prints_tables() {
    let o = kmfix(&["uafpp", "--config", config("uafpp_banach.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("21/200"));
}
