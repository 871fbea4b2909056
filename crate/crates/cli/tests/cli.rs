use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIASED: &str = r#"{
  "n": 2,
  "alphabets": [2, 2],
  "format": "dense",
  "probs": [0.16, 0.24, 0.24, 0.36]
}
"#;

const FAIR: &str = r#"{
  "n": 2,
  "alphabets": [["T", "H"], 2],
  "format": "sparse",
  "probs": [
    {"path": [0, 0], "p": 0.25},
    {"path": [0, 1], "p": 0.25},
    {"path": [1, 0], "p": 0.25},
    {"path": [1, 1], "p": 0.25}
  ]
}
"#;

const DIAGONAL: &str = r#"{
  "n": 2,
  "alphabets": [2, 2],
  "format": "dense",
  "probs": [0.5, 0.0, 0.0, 0.5]
}
"#;

fn atv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        let files = Self {
            dir: TempDir::new().unwrap(),
        };
        files.put("biased.json", BIASED);
        files.put("fair.json", FAIR);
        files.put("diagonal.json", DIAGONAL);
        files
    }

    fn put(&self, name: &str, body: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

fn compute(files: &Files, mu: &str, nu: &str, extra: &[&str]) -> Value {
    let (mu, nu) = (files.path(mu), files.path(nu));
    let mut args = vec!["compute", "--mu", &mu, "--nu", &nu];
    args.extend_from_slice(extra);
    let out = atv(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

#[test]
fn atv_of_the_bernoulli_pair() {
    let files = Files::new();
    let record = compute(
        &files,
        "biased.json",
        "fair.json",
        &["--metric", "atv", "--breakdown"],
    );
    let value = record["value"].as_f64().unwrap();
    assert!((value - 0.38).abs() <= 1e-12, "{value}");
    assert_eq!(record["metric"], "atv");
    assert_eq!(record["method"], "recursive");
    let stages: f64 = record["breakdown"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((stages - value).abs() <= 1e-12);
    let digest = record["inputs"]["mu"]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
}

#[test]
fn methods_agree() {
    let files = Files::new();
    let value = |method: &str| {
        compute(
            &files,
            "biased.json",
            "diagonal.json",
            &["--metric", "atv", "--method", method],
        )["value"]
            .as_f64()
            .unwrap()
    };
    let rec = value("recursive");
    assert!((rec - value("dp")).abs() <= 1e-9);
    assert!((rec - value("lp")).abs() <= 1e-7);
}

#[test]
fn identical_files_are_at_distance_zero() {
    let files = Files::new();
    for metric in ["tv", "atv", "kl"] {
        let record = compute(&files, "fair.json", "fair.json", &["--metric", metric]);
        assert_eq!(record["value"].as_f64(), Some(0.0), "{metric}");
    }
}

#[test]
fn kl_without_support_is_infinite() {
    let files = Files::new();
    let record = compute(&files, "fair.json", "diagonal.json", &["--metric", "kl"]);
    assert_eq!(record["value"], "inf");
}

#[test]
fn output_file_matches_stdout() {
    let files = Files::new();
    let target = files.path("result.json");
    let (mu, nu) = (files.path("biased.json"), files.path("fair.json"));
    let printed = atv(&["compute", "--mu", &mu, "--nu", &nu, "--metric", "tv"]);
    let written = atv(&[
        "compute", "--mu", &mu, "--nu", &nu, "--metric", "tv", "--out", &target,
    ]);
    assert!(written.status.success());
    assert!(written.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&target).unwrap(), stdout(&printed));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let files = Files::new();
    let bad = files.put("bad.json", "{\n  \"n\": 2,\n  \"alphabets\": [2, 2\n}\n");
    let fair = files.path("fair.json");
    let out = atv(&[
        "compute",
        "--mu",
        bad.to_str().unwrap(),
        "--nu",
        &fair,
        "--metric",
        "tv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    let expected = format!("error: parse: {}:4:", bad.display());
    assert!(err.starts_with(&expected), "{err}");
}

#[test]
fn unnormalized_file_is_a_validation_error() {
    let files = Files::new();
    let bad = files.put("heavy.json", &BIASED.replace("0.36", "0.46"));
    let fair = files.path("fair.json");
    let out = atv(&[
        "compute",
        "--mu",
        bad.to_str().unwrap(),
        "--nu",
        &fair,
        "--metric",
        "atv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).starts_with("error: validation:"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn lp_over_the_cap_exits_three() {
    let files = Files::new();
    let (mu, nu) = (files.path("biased.json"), files.path("fair.json"));
    let out = atv(&[
        "compute",
        "--mu",
        &mu,
        "--nu",
        &nu,
        "--metric",
        "atv",
        "--method",
        "lp",
        "--max-vars",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error: cap-exceeded:"));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = atv(&["compute", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: usage:"));
    assert!(atv(&["--help"]).status.success());
}

#[test]
fn verify_passes_on_a_small_sweep() {
    let out = atv(&[
        "verify",
        "--seed",
        "42",
        "--count",
        "100",
        "--n",
        "3",
        "--alphabet",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.ends_with("result: pass\n"), "{text}");
    assert!(text.contains("adapted-pinsker"), "{text}");
}

#[test]
fn verify_is_reproducible() {
    let args = [
        "verify",
        "--seed",
        "7",
        "--count",
        "40",
        "--zero-fraction",
        "0.2",
    ];
    let (a, b) = (atv(&args), atv(&args));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn one_stage_sweep_has_equal_pinsker_slacks() {
    let out = atv(&["verify", "--count", "50", "--n", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let worst = |name: &str| {
        let line = text
            .lines()
            .find(|l| l.split_whitespace().next() == Some(name))
            .unwrap_or_else(|| panic!("no {name} line in {text}"));
        line.split_whitespace().last().unwrap().to_string()
    };
    assert_eq!(worst("adapted-pinsker"), worst("classical-pinsker"));
}

#[test]
fn verify_rejects_bad_arguments() {
    assert_eq!(atv(&["verify", "--count", "0"]).status.code(), Some(2));
    let out = atv(&[
        "verify",
        "--family",
        "bernoulli-eps",
        "--eps",
        "0.5",
        "--n",
        "2",
        "--alphabet",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = atv(&[
        "verify",
        "--family",
        "bernoulli-eps",
        "--n",
        "2",
        "--alphabet",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bernoulli_family_sweep_passes() {
    let out = atv(&[
        "verify",
        "--family",
        "bernoulli-eps",
        "--eps",
        "0.2",
        "--count",
        "5",
        "--n",
        "3",
        "--alphabet",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

fn tightness_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn tightness_defaults() {
    let files = Files::new();
    let (a, b) = (files.path("a.csv"), files.path("b.csv"));
    assert!(atv(&["tightness", "--out", &a]).status.success());
    assert!(atv(&["tightness", "--out", &b]).status.success());
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert!(!bytes.contains(&b'\r'));
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("n,eps,atv,atv_closed,kl,kl_closed,ratio,bound_ok")
    );
    let rows = tightness_rows(Path::new(&a));
    assert_eq!(rows.len(), 60);
    let keys: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert!(keys
        .windows(2)
        .all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1)));
    for row in &rows {
        assert_eq!(row[7], "true", "{row:?}");
        let atv: f64 = row[2].parse().unwrap();
        let closed: f64 = row[3].parse().unwrap();
        assert!(
            (atv - closed).abs() <= 1e-12 * closed.max(1e-300) + 1e-15,
            "{row:?}"
        );
    }
}

#[test]
fn tightness_rejects_bad_grids() {
    assert_eq!(
        atv(&["tightness", "--eps-grid", "0.1,0.5"]).status.code(),
        Some(2)
    );
    let out = atv(&["tightness", "--eps-grid", "geometric:0.1:0.01"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: parse:"));
    assert_eq!(
        atv(&["tightness", "--n-list", "0,2"]).status.code(),
        Some(2)
    );
}

#[test]
fn tightness_with_an_explicit_grid() {
    let out = atv(&["tightness", "--n-list", "2", "--eps-grid", "0.1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let atv: f64 = row[2].parse().unwrap();
    assert!((atv - 0.38).abs() <= 1e-12);
}
