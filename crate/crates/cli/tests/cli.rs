//! End-to-end runs of the `gibbs-tv` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const PATH4_MU: &str = r#"{"format":1,"model":"hardcore","vertices":["a","b","c","d"],
"edges":[["a","b"],["b","c"],["c","d"]],"lambda":{"a":1.0,"b":0.8,"c":1.2,"d":0.5}}"#;
const PATH4_NU: &str = r#"{"format":1,"model":"hardcore","vertices":["a","b","c","d"],
"edges":[["a","b"],["b","c"],["c","d"]],"lambda":{"a":1.1,"b":0.8,"c":1.0,"d":0.5}}"#;
const ISING_PLUS: &str = r#"{"format":1,"model":"ising","vertices":["x","y","z"],
"edges":[["x","y"],["y","z"]],"J":[["x","y",0.3],["y","z",-0.2]],"h":{"x":"inf","y":0.1,"z":0.0}}"#;
const ISING_MINUS: &str = r#"{"format":1,"model":"ising","vertices":["x","y","z"],
"edges":[["x","y"],["y","z"]],"J":[["x","y",0.3],["y","z",-0.2]],"h":{"x":"-inf","y":0.1,"z":0.0}}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: TempDir::new().expect("temporary directory"),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).expect("write instance");
        path
    }
}

fn gibbs_tv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbs-tv"))
        .args(args)
        .env_remove("GIBBS_TV_THREADS")
        .output()
        .expect("run gibbs-tv")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("JSON record")
}

#[test]
fn identical_files_give_near_zero_additive_estimate() {
    let ws = Workspace::new();
    let mu = ws.file("mu.json", PATH4_MU);
    let out = gibbs_tv(&[
        "tv",
        path_str(&mu),
        path_str(&mu),
        "--mode",
        "additive",
        "--eps",
        "0.1",
        "--json",
    ]);
    let record = json(&out);
    let estimate = record["report"]["estimate"].as_f64().unwrap();
    assert!(estimate.abs() <= 0.1, "estimate {estimate}");
    assert_eq!(record["report"]["branch"], "additive");
}

#[test]
fn opposite_infinite_fields_resolve_to_one() {
    let ws = Workspace::new();
    let (mu, nu) = (
        ws.file("mu.json", ISING_PLUS),
        ws.file("nu.json", ISING_MINUS),
    );
    let record = json(&gibbs_tv(&["tv", path_str(&mu), path_str(&nu), "--json"]));
    assert_eq!(record["report"]["estimate"].as_f64(), Some(1.0));
    assert_eq!(record["report"]["branch"], "preprocess-resolved");
}

#[test]
fn exact_flag_matches_the_sampled_estimate() {
    let ws = Workspace::new();
    let (mu, nu) = (ws.file("mu.json", PATH4_MU), ws.file("nu.json", PATH4_NU));
    let exact = json(&gibbs_tv(&[
        "tv",
        path_str(&mu),
        path_str(&nu),
        "--exact",
        "--json",
    ]));
    let truth = exact["report"]["estimate"].as_f64().unwrap();
    assert_eq!(exact["report"]["branch"], "exact");
    assert!(truth > 0.0 && truth < 1.0);
    let sampled = json(&gibbs_tv(&[
        "tv",
        path_str(&mu),
        path_str(&nu),
        "--mode",
        "additive",
        "--eps",
        "0.02",
        "--json",
    ]));
    let estimate = sampled["report"]["estimate"].as_f64().unwrap();
    assert!(
        (estimate - truth).abs() <= 0.02,
        "estimate {estimate} vs exact {truth}"
    );
}

#[test]
fn marginal_and_count_commands_agree_with_exact_modes() {
    let ws = Workspace::new();
    let (mu, nu) = (ws.file("mu.json", PATH4_MU), ws.file("nu.json", PATH4_NU));
    let (m, n) = (path_str(&mu), path_str(&nu));
    let exact = json(&gibbs_tv(&[
        "marginal-tv",
        m,
        n,
        "--subset",
        "a,c",
        "--exact",
        "--json",
    ]));
    let sampled = json(&gibbs_tv(&[
        "marginal-tv",
        m,
        n,
        "--subset",
        "a,c",
        "--eps",
        "0.03",
        "--json",
    ]));
    let (e, s) = (
        exact["report"]["estimate"].as_f64().unwrap(),
        sampled["report"]["estimate"].as_f64().unwrap(),
    );
    assert!((e - s).abs() <= 0.03, "{s} vs {e}");

    let exact = json(&gibbs_tv(&[
        "count", m, "--pin", "b=-", "--exact", "--json",
    ]));
    let approx = json(&gibbs_tv(&[
        "count", m, "--pin", "b=-", "--eps", "0.1", "--json",
    ]));
    let (e, a) = (
        exact["report"]["log_partition"].as_f64().unwrap(),
        approx["report"]["log_partition"].as_f64().unwrap(),
    );
    // With b unoccupied the path splits into {a} and {c, d}: (1 + 1)(1 + 1.2 + 0.5).
    assert!((e - (2.0f64 * 2.7).ln()).abs() < 1e-12);
    assert!((a - e).abs() <= 0.1, "{a} vs {e}");
}

#[test]
fn sample_respects_the_pinning() {
    let ws = Workspace::new();
    let mu = ws.file("mu.json", PATH4_MU);
    let record = json(&gibbs_tv(&[
        "sample",
        path_str(&mu),
        "--num",
        "20",
        "--pin",
        "b=+",
        "--json",
    ]));
    let configurations = record["report"]["configurations"].as_array().unwrap();
    assert_eq!(configurations.len(), 20);
    for c in configurations {
        let c = c.as_str().unwrap();
        // b occupied forces its neighbours a and c to be empty.
        assert_eq!(&c[..3], "-+-", "{c}");
    }
}

#[test]
fn check_reports_regime_and_plan() {
    let ws = Workspace::new();
    let (mu, nu) = (ws.file("mu.json", PATH4_MU), ws.file("nu.json", PATH4_NU));
    let record = json(&gibbs_tv(&[
        "check",
        path_str(&mu),
        path_str(&nu),
        "--json",
    ]));
    let pair = &record["report"]["pair"];
    assert!((pair["d_par"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert_eq!(pair["preprocess"], "reduced");
    assert!(pair["plan"].is_object() || pair["plan_error"].is_string());
}

#[test]
fn exit_codes_follow_the_error_class() {
    let ws = Workspace::new();
    let bad = ws.file(
        "bad.json",
        r#"{"format":1,"model":"hardcore","vertices":["a"],"edges":[],"lambda":{"a":-1}}"#,
    );
    let out = gibbs_tv(&["count", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda.a"));

    let mu = ws.file("mu.json", PATH4_MU);
    let other = ws.file("other.json", ISING_PLUS);
    assert_eq!(
        gibbs_tv(&["tv", path_str(&mu), path_str(&other)])
            .status
            .code(),
        Some(2)
    );

    let vertices: Vec<String> = (0..25).map(|i| format!("\"v{i}\"")).collect();
    let lambda: Vec<String> = (0..25).map(|i| format!("\"v{i}\":1.0")).collect();
    let big = format!(
        r#"{{"format":1,"model":"hardcore","vertices":[{}],"edges":[],"lambda":{{{}}}}}"#,
        vertices.join(","),
        lambda.join(",")
    );
    let big = ws.file("big.json", &big);
    assert_eq!(
        gibbs_tv(&["count", path_str(&big), "--exact"])
            .status
            .code(),
        Some(4)
    );

    let far = ws.file("far.json", &PATH4_NU.replace("1.1", "3.0"));
    let out = gibbs_tv(&[
        "tv",
        path_str(&mu),
        path_str(&far),
        "--mode",
        "basic-relative",
        "--paper-strict",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn single_thread_records_are_reproducible() {
    let ws = Workspace::new();
    let (mu, nu) = (ws.file("mu.json", PATH4_MU), ws.file("nu.json", PATH4_NU));
    let run = |seed: &str| {
        let out = gibbs_tv(&[
            "tv",
            path_str(&mu),
            path_str(&nu),
            "--mode",
            "additive",
            "--threads",
            "1",
            "--seed",
            seed,
            "--json",
        ]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
    let record: Value = serde_json::from_slice(&run("7")).unwrap();
    assert_eq!(record["seed"], 7);
    assert_eq!(record["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(record.get("elapsed_seconds").is_none());
}

#[test]
fn text_output_lists_dotted_keys() {
    let ws = Workspace::new();
    let mu = ws.file("mu.json", PATH4_MU);
    let out = gibbs_tv(&["count", path_str(&mu), "--exact"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.lines()
            .any(|l| l.starts_with("report.log_partition: ")),
        "{text}"
    );
    assert!(text.lines().any(|l| l == "command: count"), "{text}");
}
