use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ldpsq");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("LDPSQ_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn validate(schema: &str, instance: &Value) {
    let s: Value = serde_json::from_str(&std::fs::read_to_string(schema_dir().join(schema)).unwrap()).unwrap();
    let v = jsonschema::validator_for(&s).unwrap();
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{schema}: {errors:?}");
}

fn schema_for(file: &str) -> Option<&'static str> {
    Some(match file {
        "learn_halfspace.json" => "learn_halfspace.schema.json",
        "learn_halfspace_hypothesis.json" => "hypothesis.schema.json",
        "learn_dl.json" => "learn_dl.schema.json",
        "estimate_mean.json" => "estimate_mean.schema.json",
        "adversary.json" => "adversary.schema.json",
        "adversary_certificate.json" | "adversary_demo_certificate.json" => "certificate.schema.json",
        "adversary_demo.json" => "adversary_demo.schema.json",
        "jl_check.json" => "jl_check.schema.json",
        "compile_report.json" => "compile_report.schema.json",
        "separation.json" => "separation.schema.json",
        _ => return None,
    })
}

const SMALL_RUNS: &[&[&str]] = &[
    &["learn-halfspace", "--d", "8", "--max-iters", "200", "--trials", "2", "--oracle", "ldp"],
    &["learn-halfspace", "--d", "8", "--max-iters", "100", "--mode", "known_distribution", "--oracle", "comm"],
    &["learn-dl", "--d", "5", "--len", "3", "--oracle", "ldp", "--trials", "3"],
    &["estimate-mean", "--trials", "10"],
    &["estimate-mean", "--trials", "10", "--channel", "comm", "--backend", "aggregate"],
    &["adversary", "--class", "hs", "--d", "3", "--m", "3"],
    &["adversary", "--class", "dl", "--d", "2", "--m", "1"],
    &["adversary-demo"],
    &["jl-check", "--d", "30", "--trials", "3", "--support", "40"],
    &["compile-report", "--learner", "dl", "--channel", "comm", "--d", "4"],
    &["compile-report", "--d", "6", "--max-iters", "50"],
    &["separation", "--hs-max-iters", "200"],
];

#[test]
fn every_command_emits_valid_artifacts() {
    for args in SMALL_RUNS {
        let dir = tempfile::tempdir().unwrap();
        let o = run(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let out = files(dir.path());
        assert!(out.keys().any(|k| k.ends_with(".csv")), "{args:?} wrote no CSV");
        for (name, bytes) in &out {
            let text = std::str::from_utf8(bytes).unwrap();
            if name.ends_with(".csv") {
                assert!(text.starts_with("# ldpsq "), "{name}");
                assert!(text.lines().next().unwrap().ends_with(" csv v1"), "{name}");
            } else if name.ends_with(".jsonl") {
                for line in text.lines() {
                    validate("transcript_entry.schema.json", &serde_json::from_str(line).unwrap());
                }
            } else {
                let schema = schema_for(name).unwrap_or_else(|| panic!("no schema for {name}"));
                validate(schema, &serde_json::from_str(text).unwrap());
            }
        }
    }
}

#[test]
fn config_schema_accepts_emitted_configs() {
    for args in SMALL_RUNS {
        let dir = tempfile::tempdir().unwrap();
        assert!(run(args, dir.path()).status.success());
        let (_, bytes) = files(dir.path()).into_iter().find(|(k, _)| schema_for(k).is_some() && !k.contains("certificate") && !k.contains("hypothesis")).unwrap();
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        let mut cfg = v["config"].clone();
        cfg["command"] = v["command"].clone();
        validate("config.schema.json", &cfg);
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    for args in SMALL_RUNS {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert!(run(args, a.path()).status.success());
        assert!(run(args, b.path()).status.success());
        assert_eq!(files(a.path()), files(b.path()), "{args:?}");
    }
}

#[test]
fn different_seeds_differ() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&["estimate-mean", "--trials", "5", "--seed", "1"], a.path()).status.success());
    assert!(run(&["estimate-mean", "--trials", "5", "--seed", "2"], b.path()).status.success());
    assert_ne!(files(a.path()), files(b.path()));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // margin larger than the source provides: precondition refusal
    let src = dir.path().join("src.json");
    let s = ldpsq::domain::synthetic::margin_source(4, 0.2, 30, &mut ldpsq::seed::rng(0, "t", 0)).unwrap();
    std::fs::write(&src, s.to_json().unwrap()).unwrap();
    let o = run(&["learn-halfspace", "--gamma", "0.9", "--source", src.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    // the demo learner issues more queries than m allows
    let o = run(&["adversary-demo", "--k", "5", "--m", "4"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    // unreachable success rate: the check fails, but only --check turns that into a status
    let o = run(&["jl-check", "--d", "10", "--trials", "2", "--support", "20", "--min-success", "1.5", "--check"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["jl-check", "--d", "10", "--trials", "2", "--support", "20", "--min-success", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(0));

    assert_eq!(run(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["learn-dl", "--alpha", "2"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command":"learn-dl","d":4,"len":2,"trials":2,"seed":5}"#).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["run", "--config", cfg.to_str().unwrap()], &a).status.success());
    let v: Value = serde_json::from_slice(&std::fs::read(a.join("learn_dl.json")).unwrap()).unwrap();
    assert_eq!((v["config"]["d"].as_u64(), v["config"]["trials"].as_u64()), (Some(4), Some(2)));

    assert!(run(&["learn-dl", "--config", cfg.to_str().unwrap(), "--trials", "1"], &b).status.success());
    let v: Value = serde_json::from_slice(&std::fs::read(b.join("learn_dl.json")).unwrap()).unwrap();
    assert_eq!((v["config"]["d"].as_u64(), v["config"]["trials"].as_u64()), (Some(4), Some(1)));

    std::fs::write(&cfg, r#"{"command":"learn-dl","dims":4}"#).unwrap();
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()], &a).status.code(), Some(1));
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["adversary-demo"])
        .env("LDPSQ_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("adversary_demo.csv").exists());
}
