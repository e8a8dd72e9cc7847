use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

fn tosg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tosg")).args(args).output().unwrap()
}

fn tosg_on(cmd: &str, input: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, input.to_str().unwrap()];
    args.extend_from_slice(extra);
    tosg(&args)
}

const FILE_COMMANDS: [(&str, &str, &str); 8] = [
    ("solve-matrix", "matrix.json", "t,weight,cdf"),
    ("solve-duel", "duel.json", "t,weight,cdf"),
    ("simulate-duel", "duel_times.json", "key,value"),
    ("eval-tree", "tree.json", "key,value"),
    ("solve-timing", "kernel.json", "t,weight,cdf"),
    ("risk", "risk.json", "key,value"),
    ("solve-tosg", "tosg_problem.json", "key,value"),
    ("run-protocol", "protocol.json", "t,weight,cdf"),
];

fn extra(cmd: &str) -> Vec<&'static str> {
    match cmd {
        "simulate-duel" => vec!["--seed", "7", "--iterations", "2000"],
        "solve-duel" => vec!["--grid", "51"],
        _ => vec![],
    }
}

#[test]
fn every_subcommand_emits_json_and_csv() {
    for (cmd, file, header) in FILE_COMMANDS {
        let mut args = extra(cmd);
        let out = tosg_on(cmd, &data(file), &args);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let _: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{cmd}: {e}"));

        args.extend(["--format", "csv"]);
        let out = tosg_on(cmd, &data(file), &args);
        assert_eq!(out.status.code(), Some(0), "{cmd} csv");
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{cmd}");
        let width = header.split(',').count();
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == width), "{cmd}");
    }
}

#[test]
fn evasion_value() {
    let out = tosg(&["solve-evasion", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.381966).abs() < 1e-6);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let to_file = tosg_on("run-protocol", &data("protocol.json"), &["-o", path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    let to_stdout = tosg_on("run-protocol", &data("protocol.json"), &[]);
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn seeded_simulation_is_reproducible() {
    let args = ["--seed", "42", "--iterations", "5000"];
    let a = tosg_on("simulate-duel", &data("duel_times.json"), &args);
    let b = tosg_on("simulate-duel", &data("duel_times.json"), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn version_names_format_schema() {
    let out = tosg(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "tosg 0.1.0 (format schema 1)");
}

#[test]
fn missing_input_names_the_path() {
    let out = tosg(&["solve-matrix", "/nonexistent/game.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/game.json"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["frobnicate"][..], &["solve-duel", "x.json", "--grid", "-5"], &["simulate-duel", "x.json"], &["solve-matrix", "x.json", "--player", "3"]] {
        assert_eq!(tosg(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn oversized_grids_are_resource_errors() {
    let duel = tosg_on("solve-duel", &data("duel.json"), &["--grid", "100000000000"]);
    let timing = tosg_on("solve-timing", &data("kernel.json"), &["--grid", "1000000"]);
    for out in [duel, timing] {
        assert_eq!(out.status.code(), Some(1));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn protocol_failure_reports_partial_stages() {
    let dir = tempfile::tempdir().unwrap();
    let mut config: serde_json::Value = serde_json::from_slice(&std::fs::read(data("protocol.json")).unwrap()).unwrap();
    config["constraints"][2] = serde_json::json!({"kind": "coord", "index": 0});
    let path = dir.path().join("bad.json");
    std::fs::write(&path, config.to_string()).unwrap();
    let out = tosg_on("run-protocol", &path, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("stage: solve"));
    assert!(err.contains("\"targets\""));
}

#[test]
fn malformed_inputs_fail_cleanly() {
    let corpus = [
        "",
        "   ",
        "{",
        "[]",
        "null",
        "42",
        "\"text\"",
        "{}",
        r#"{"rows": "abc"}"#,
        r#"{"rows": [[1, 2], [3]]}"#,
        r#"{"rows": [[1e400]]}"#,
        r#"{"rows": [[NaN]]}"#,
        r#"{"grid_n": -3}"#,
        r#"{"grid_n": 1e30}"#,
        r#"{"kind": "mitigating", "pi": 2.0, "pn": 0.5, "ce": 1.0}"#,
        r#"{"kind": "economic", "threat": -1, "vulnerability": 0.5, "cost": 1}"#,
        r#"{"A": {"kind": "duel"}, "grid_n": 1}"#,
        r#"{"A": {"kind": "affine", "cx": 1, "cy": -1, "cxy": 0, "c0": 0}, "grid_n": 1e308}"#,
        "\u{feff}{\"rows\": [[0]]}",
    ];
    let dir = tempfile::tempdir().unwrap();
    for (k, text) in corpus.iter().enumerate() {
        let path = dir.path().join(format!("case{k}.json"));
        std::fs::write(&path, text).unwrap();
        for (cmd, _, _) in FILE_COMMANDS {
            let out = tosg_on(cmd, &path, &extra(cmd));
            let code = out.status.code();
            assert!(matches!(code, Some(1 | 2)), "{cmd} on {text:?}: {code:?}");
            assert!(!out.stderr.is_empty(), "{cmd} on {text:?}");
        }
    }
}
