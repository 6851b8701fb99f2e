use std::path::Path;
use std::process::{Command, Output};

use asymconj::conjugate::{GridFn, GridSpec};
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymconj"))
        .args(args)
        .output()
        .expect("spawn asymconj")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn record<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["name"] == name)
        .unwrap_or_else(|| panic!("no record {name}"))
}

#[test]
fn missing_seed_is_usage_error() {
    let o = bin(&["verify"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(code(&bin(&["verify", "--seed", "1", "--bogus"])), 2);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&bin(&["--help"])), 0);
}

#[test]
fn example1_default_passes_and_writes_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("e1");
    let o = bin(&["example1", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert_eq!(r["command"], "example1");
    assert_eq!(r["summary"]["fail"], 0);
    assert!(out.join("frechet_remainder.csv").exists());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().last().unwrap().contains("0 failed"));
}

#[test]
fn example1_rejects_bad_dimension() {
    assert_eq!(code(&bin(&["example1", "--seed", "1", "--dim", "5"])), 2);
}

#[test]
fn example1_over_cap_is_usage_error() {
    assert_eq!(code(&bin(&["example1", "--seed", "1", "--dim", "3"])), 2);
}

#[test]
fn impossible_tolerance_fails_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("strict");
    let o = bin(&[
        "example1",
        "--seed",
        "1",
        "--mode",
        "frechet",
        "--tol-frechet",
        "1e-12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(
        record(&report(&out), "example1/frechet/statement-i")["status"],
        "fail"
    );
}

#[test]
fn cgf_builtin_matches_oracle() {
    let o = bin(&["cgf", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["summary"]["fail"], 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("0.1308120359411"), "{text}");
}

#[test]
fn cgf_non_coercive_point_is_informational() {
    let o = bin(&["cgf", "--seed", "1", "--y", "1,0"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["summary"]["fail"], 0);
    assert!(r["summary"]["info"].as_u64().unwrap() >= 1);
}

#[test]
fn cgf_rejects_invalid_model() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("m.json");
    // Weights do not sum to one.
    std::fs::write(&p, r#"{"atoms": [[1.0], [-1.0]], "weights": [0.5, 0.6]}"#).unwrap();
    assert_eq!(
        code(&bin(&[
            "cgf",
            "--seed",
            "1",
            "--model",
            p.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn conjugate_reads_grid_json() {
    let tmp = tempfile::tempdir().unwrap();
    let f = GridFn::from_fn(GridSpec::cube(-1.0, 1.0, 41, 1).unwrap(), |x| x[0] * x[0]).unwrap();
    let p = tmp.path().join("f.json");
    std::fs::write(&p, serde_json::to_string(&f).unwrap()).unwrap();
    let out = tmp.path().join("c");
    let o = bin(&[
        "conjugate",
        "--input",
        p.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        record(&report(&out), "conjugate/biconjugate-below")["status"],
        "pass"
    );
    assert!(out.join("conjugate.json").exists());
}

#[test]
fn conjugate_without_input_is_usage_error() {
    assert_eq!(code(&bin(&["conjugate"])), 2);
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# run\nseed = 5\ntol-gateaux = 2e-4\nmode = \"gateaux\"\n",
    )
    .unwrap();
    let o = bin(&["example1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["seed"], 5);
    assert_eq!(r["tolerances"]["gateaux"], 2e-4);

    let o = bin(&["example1", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["seed"], 9);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    std::fs::write(&cfg, "seed = 1\ncolour = blue\n").unwrap();
    assert_eq!(
        code(&bin(&["verify", "--config", cfg.to_str().unwrap()])),
        2
    );
}

#[test]
fn example1_output_is_deterministic() {
    let strip = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.contains("wall_clock_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = bin(&["example1", "--seed", "11"]);
    let b = bin(&["example1", "--seed", "11"]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_asymconj"))
            .args(["cgf", "--seed", "4"])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.contains("wall_clock_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(run("1"), run("4"));
}
