use std::path::Path;
use std::process::Command;

use coalcount::cli::{self, EXIT_BUDGET, EXIT_CONFIG, EXIT_ISM, EXIT_OK, EXIT_PARSE};
use serde_json::Value;

const SIX_SAMPLE: &str =
    "id,s1,s2,s3,s4\na,0,1,0,0\nb,1,0,1,0\nc,0,0,0,1\nd,0,0,0,1\ne,0,0,0,1\nf,0,0,0,1\n";

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(
        std::iter::once("coalcount").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn unconstrained_counts() {
    let (code, out, _) = run(&["unconstrained", "--n", "5"]);
    assert_eq!(code, EXIT_OK);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["counts"]["kingman"], "180");
    assert_eq!(doc["counts"]["shape"], "3");
    let (_, csv, _) = run(&["unconstrained", "--n", "5", "--format", "csv"]);
    assert_eq!(
        csv,
        "resolution,count\nkingman,180\ntajima,5\nlabeled,105\nshape,3\n"
    );
}

#[test]
fn count_csv_has_a_row_per_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "six_sample.csv", SIX_SAMPLE);
    let (code, out, _) = run(&[
        "count",
        "--input",
        &input,
        "--n-draws",
        "2000",
        "--seed",
        "3",
        "--format",
        "csv",
        "--quiet",
    ]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0]
        .starts_with("resolution,n_draws,estimate,log10_estimate,std_error,rse,cv2,ess,q_n,seed"));
    assert!(lines[1].starts_with("kingman,2000,"));
    assert!(lines[4].starts_with("shape,2000,"));
}

fn strip_timing(text: &str) -> Value {
    let mut doc: Value = serde_json::from_str(text).unwrap();
    doc["config"]["workers"] = Value::Null;
    for r in doc["results"].as_array_mut().unwrap() {
        r["elapsed_ms"] = Value::Null;
    }
    doc
}

#[test]
fn count_json_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "six_sample.csv", SIX_SAMPLE);
    let base = [
        "count",
        "--input",
        &input,
        "--n-draws",
        "3000",
        "--seed",
        "9",
        "--quiet",
        "--workers",
    ];
    let one = run(&[&base[..], &["1"]].concat());
    let three = run(&[&base[..], &["3"]].concat());
    assert_eq!(one.0, EXIT_OK);
    assert_eq!(strip_timing(&one.1), strip_timing(&three.1));
    let doc: Value = serde_json::from_str(&one.1).unwrap();
    assert_eq!(doc["command"], "count");
    assert_eq!(doc["config"]["seed"], 9);
    assert_eq!(doc["results"].as_array().unwrap().len(), 4);
    for key in [
        "estimate",
        "log10_estimate",
        "std_error",
        "rse",
        "cv2",
        "ess",
        "q_n",
        "seed",
        "elapsed_ms",
    ] {
        assert!(doc["results"][0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn resolution_subset() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "six_sample.csv", SIX_SAMPLE);
    let (code, out, _) = run(&[
        "count",
        "--input",
        &input,
        "--n-draws",
        "100",
        "--seed",
        "1",
        "--resolutions",
        "shape,kingman",
        "--quiet",
    ]);
    assert_eq!(code, EXIT_OK);
    let doc: Value = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = doc["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["resolution"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["shape", "kingman"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let six_sample = write(dir.path(), "six_sample.csv", SIX_SAMPLE);
    let bad = write(dir.path(), "bad.csv", "0,1\n1,x\n");
    let conflict = write(dir.path(), "conflict.txt", "11\n10\n01\n00\n");

    assert_eq!(
        run(&["count", "--input", &bad, "--seed", "1"]).0,
        EXIT_PARSE
    );
    let (code, _, err) = run(&["count", "--input", &conflict, "--seed", "1"]);
    assert_eq!(code, EXIT_ISM);
    assert!(err.contains("s1 x s2"));
    assert_eq!(
        run(&["enumerate", "--input", &six_sample, "--enum-budget", "5"]).0,
        EXIT_BUDGET
    );
    assert_eq!(
        run(&[
            "count",
            "--input",
            &six_sample,
            "--seed",
            "1",
            "--n-draws",
            "1"
        ])
        .0,
        EXIT_CONFIG
    );
    assert_eq!(
        run(&[
            "count",
            "--input",
            &six_sample,
            "--seed",
            "1",
            "--resolutions",
            "ranked"
        ])
        .0,
        EXIT_CONFIG
    );
    assert_eq!(
        run(&["count", "--input", &six_sample, "--bogus"]).0,
        EXIT_CONFIG
    );
    assert_eq!(run(&["unconstrained", "--n", "0"]).0, EXIT_CONFIG);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn filter_ism_recovers_conflicting_data() {
    let dir = tempfile::tempdir().unwrap();
    let conflict = write(dir.path(), "conflict.txt", "11\n10\n01\n00\n");
    let (code, out, err) = run(&[
        "count",
        "--input",
        &conflict,
        "--seed",
        "1",
        "--n-draws",
        "100",
        "--filter-ism",
        "--quiet",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["removed_sites"], serde_json::json!(["s1"]));
}

#[test]
fn enumerate_fig4() {
    let dir = tempfile::tempdir().unwrap();
    let six_sample = write(dir.path(), "six_sample.csv", SIX_SAMPLE);
    let (code, out, _) = run(&["enumerate", "--input", &six_sample, "--list-trees"]);
    assert_eq!(code, EXIT_OK);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["counts"]["kingman"], "108");
    assert_eq!(doc["counts"]["tajima"], "10");
    assert_eq!(doc["counts"]["labeled"], "45");
    assert_eq!(doc["counts"]["shape"], "4");
    assert_eq!(doc["trees"].as_array().unwrap().len(), 45);
}

#[test]
fn phylogeny_dot_for_fig4() {
    let dir = tempfile::tempdir().unwrap();
    let six_sample = write(dir.path(), "six_sample.csv", SIX_SAMPLE);
    let (code, out, _) = run(&["phylogeny", "--input", &six_sample, "--format", "dot"]);
    assert_eq!(code, EXIT_OK);
    let mut labels: Vec<&str> = out
        .lines()
        .filter(|l| l.trim_start().starts_with("n") && l.contains("label=") && !l.contains("->"))
        .map(|l| l.split("label=\"").nth(1).unwrap().trim_end_matches("\"];"))
        .collect();
    labels.sort_unstable();
    assert_eq!(labels, ["0", "1", "1", "4"]);
    let (_, json, _) = run(&["phylogeny", "--input", &six_sample, "--view", "perfect"]);
    let doc: Value = serde_json::from_str(&json).unwrap();
    assert!(doc["nodes"].as_array().unwrap().len() >= 4);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, _, _) = run(&[
            "simulate",
            "--n",
            "10",
            "--mu",
            "5",
            "--seed",
            "7",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap())
            .unwrap();
    for key in ["n", "mu", "seed", "m", "k", "L"] {
        assert!(meta.get(key).is_some(), "missing {key}");
    }
    assert_eq!(meta["seed"], 7);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn binary_reads_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let six_sample = write(dir.path(), "six_sample.csv", SIX_SAMPLE);
    let out = Command::new(env!("CARGO_BIN_EXE_coalcount"))
        .args([
            "count",
            "--input",
            &six_sample,
            "--n-draws",
            "50",
            "--quiet",
        ])
        .env("COALCOUNT_SEED", "1234")
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["seed"], 1234);

    let bad = Command::new(env!("CARGO_BIN_EXE_coalcount"))
        .args(["unconstrained", "--n", "0"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
}
