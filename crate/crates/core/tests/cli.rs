use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Stdio};

use ontorec::fixtures;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ontorec"))
}

fn write_ehda(dir: &Path) {
    fixtures::write_corpus(&dir.join("corpus.jsonl"), &fixtures::ehda_lines()).unwrap();
    let acceptance = fixtures::uniform_acceptance(&fixtures::ehda_repository());
    fixtures::write_acceptance(&dir.join("acceptance.json"), &acceptance).unwrap();
}

fn recommend(dir: &Path, extra: &[&str]) -> std::process::Output {
    let corpus = dir.join("corpus.jsonl");
    let acceptance = dir.join("acceptance.json");
    bin()
        .args(["recommend", "--corpus"])
        .arg(&corpus)
        .arg("--acceptance")
        .arg(&acceptance)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn recommend_prints_json_ranking() {
    let dir = tempfile::tempdir().unwrap();
    write_ehda(dir.path());
    let out = recommend(dir.path(), &["--input", "melanoma", "--format", "json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["ranking"][0]["ontologies"][0], "NCIT");
}

#[test]
fn recommend_table_and_input_file() {
    let dir = tempfile::tempdir().unwrap();
    write_ehda(dir.path());
    let input = dir.path().join("input.txt");
    std::fs::write(&input, fixtures::MELANOMA_INPUT).unwrap();
    let out = recommend(
        dir.path(),
        &[
            "--input-file",
            input.to_str().unwrap(),
            "--format",
            "table",
            "--algorithm",
            "v1",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert!(first.contains("EHDA"), "{text}");
}

#[test]
fn missing_corpus_is_usage_error() {
    let out = bin()
        .args(["recommend", "--input", "melanoma"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--corpus"));
}

#[test]
fn invalid_weights_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    write_ehda(dir.path());
    let out = recommend(dir.path(), &["--input", "melanoma", "--wc", "0.9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("InvalidWeights"));
}

#[test]
fn unreadable_corpus_exit_nonzero() {
    let out = bin()
        .args([
            "recommend",
            "--corpus",
            "/nonexistent/corpus.jsonl",
            "--input",
            "x",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn serve_on_port_zero_reports_address() {
    let dir = tempfile::tempdir().unwrap();
    write_ehda(dir.path());
    let mut child = bin()
        .args(["serve", "--port", "0", "--corpus"])
        .arg(dir.path().join("corpus.jsonl"))
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .expect(&line)
        .to_string();
    assert!(!addr.ends_with(":0"));

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(
        response.ends_with(r#"{"status":"ok","ontologies":2}"#),
        "{response}"
    );
}

#[test]
fn evaluate_missing_fixtures_fails() {
    let dir = tempfile::tempdir().unwrap();
    write_ehda(dir.path());
    let out = bin()
        .args(["evaluate", "--corpus-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no fixture inputs"));
}

#[test]
fn evaluate_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    assert!(bin()
        .args(["evaluate", "--write-suite"])
        .arg(&suite)
        .output()
        .unwrap()
        .status
        .success());
    let report = dir.path().join("report.json");
    let out = bin()
        .args(["evaluate", "--corpus-dir"])
        .arg(&suite)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("Keyword inputs"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["tables"].as_array().unwrap().len(), 2);
}
