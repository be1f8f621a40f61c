use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cms(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cms"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("cms runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn fixtures() -> TempDir {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "loopsys.json",
        r#"{"type":"loop_system","loops":{"1":1,"2":"inf"},"tail":"zero"}"#,
    );
    write(
        &dir,
        "golden_loops.json",
        r#"{"type":"loop_system","loops":{"1":1,"2":1}}"#,
    );
    write(
        &dir,
        "ones.json",
        r#"{"type":"loop_system","loops":{"1":1},"tail":{"constant":1}}"#,
    );
    write(
        &dir,
        "golden.json",
        r#"{"type":"finite_matrix","alphabet":[1,2],"edges":[[1,1],[1,2],[2,1]]}"#,
    );
    write(&dir, "full.json", r#"{"type":"full_shift"}"#);
    write(
        &dir,
        "zero.json",
        r#"{"depth":1,"tail":{"kind":"constant","c":0.0}}"#,
    );
    write(
        &dir,
        "log2.json",
        r#"{"depth":1,"tail":{"kind":"log","coeff":-2.0}}"#,
    );
    write(&dir, "fixed.json", r#"{"kind":"periodic","word":[1]}"#);
    write(
        &dir,
        "targets.json",
        r#"[{"kind":"periodic","word":[1]},{"kind":"markov","symbols":[1,2],"stationary":["2/3","1/3"],"transition":[["1/2","1/2"],["1","0"]]}]"#,
    );
    dir
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn escape_demo_table() {
    let dir = fixtures();
    let out = cms(
        dir.path(),
        &["demo", "escape-full-shift", "--csv", "demo.csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    for row in rows {
        assert_eq!(row["masses"][0], "1/2");
    }
    let last = &rows[6]["masses"];
    assert!(last.as_array().unwrap()[1..].iter().all(|m| m == "0"));
    assert_eq!(report["classification"]["kind"], "finitely_additive");
    let csv = fs::read_to_string(dir.path().join("demo.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    for name in header.split(',') {
        assert!(
            csv.contains(&format!("# column {name}: ")),
            "{name} lacks metadata"
        );
    }
}

#[test]
fn classify_loop_system() {
    let dir = fixtures();
    let out = cms(dir.path(), &["classify", "--shift", "loopsys.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["f_property"]["status"], "fails");
    assert_eq!(r["finite_uniform_rome"]["status"], "holds");
}

#[test]
fn invalid_json_reports_field_path() {
    let dir = fixtures();
    write(
        &dir,
        "bad.json",
        r#"{"depth":"one","tail":{"kind":"constant","c":0.0}}"#,
    );
    let out = cms(
        dir.path(),
        &[
            "pressure",
            "--shift",
            "golden.json",
            "--potential",
            "bad.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`depth`"), "{err}");
    assert!(err.contains("line 1"), "{err}");

    write(&dir, "truncated.json", r#"{"type":"full_shift""#);
    let out = cms(dir.path(), &["classify", "--shift", "truncated.json"]);
    assert_eq!(out.status.code(), Some(1));

    let out = cms(dir.path(), &["classify", "--shift", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = fixtures();
    assert_eq!(cms(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(cms(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn golden_mean_pressure() {
    let dir = fixtures();
    for method in ["auto", "truncation", "partition"] {
        let out = cms(
            dir.path(),
            &[
                "pressure",
                "--shift",
                "golden.json",
                "--potential",
                "zero.json",
                "--method",
                method,
            ],
        );
        assert_eq!(out.status.code(), Some(0), "{method}");
        let p = json(&out)["value"].as_f64().unwrap();
        assert!(
            (p - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-3,
            "{method}: {p}"
        );
    }
}

#[test]
fn infinite_pressure_is_refused() {
    let dir = fixtures();
    let out = cms(
        dir.path(),
        &[
            "pressure",
            "--shift",
            "full.json",
            "--potential",
            "zero.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "refused");
    let out = cms(
        dir.path(),
        &[
            "dualvp",
            "--shift",
            "full.json",
            "--potential",
            "zero.json",
            "--measure",
            "fixed.json",
            "--symbols",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn s_infinity_of_log_potential() {
    let dir = fixtures();
    let out = cms(
        dir.path(),
        &[
            "s-infinity",
            "--shift",
            "full.json",
            "--potential",
            "log2.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let s = json(&out)["value"].as_f64().unwrap();
    assert!((s - 0.5).abs() < 1e-3);
}

#[test]
fn converge_zero_measure_sequence() {
    let dir = fixtures();
    write(
        &dir,
        "zseq.json",
        r#"{"kind":"zero_measure","n":[4,8,16,32,64,128]}"#,
    );
    let out = cms(
        dir.path(),
        &[
            "converge",
            "--shift",
            "ones.json",
            "--sequence",
            "zseq.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["report"]["classification"]["kind"], "total_escape");
    assert!(r["report"]["lambda"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn approximate_is_deterministic_and_atomic() {
    let dir = fixtures();
    let args = [
        "approximate",
        "--shift",
        "golden.json",
        "--targets",
        "targets.json",
        "--n",
        "64",
        "--seed",
        "7",
    ];
    let mut a = args.to_vec();
    a.extend(["--out", "a.json"]);
    let mut b = args.to_vec();
    b.extend(["--out", "b.json"]);
    assert_eq!(cms(dir.path(), &a).status.code(), Some(0));
    assert_eq!(cms(dir.path(), &b).status.code(), Some(0));
    let ta = fs::read(dir.path().join("a.json")).unwrap();
    let tb = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(ta, tb);
    let plan: Value = serde_json::from_slice(&ta).unwrap();
    assert!(plan["weakstar_to_average"].as_f64().unwrap() < 0.05);
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn dichotomy_branches() {
    let dir = fixtures();
    let out = cms(dir.path(), &["dichotomy", "--shift", "ones.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["branch"], "f_holds");
    assert_eq!(r["all_rejected"], true);
    let out = cms(
        dir.path(),
        &[
            "dichotomy",
            "--shift",
            "full.json",
            "--seed",
            "7",
            "--depth",
            "5",
        ],
    );
    let r = json(&out);
    assert_eq!(r["branch"], "f_fails");
    assert_eq!(r["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn dualvp_parry_gap() {
    let dir = fixtures();
    write(
        &dir,
        "parry.json",
        r#"{"kind":"markov_approx","symbols":[1,2],"stationary":[0.7236067977499789,0.27639320225002106],"transition":[[0.6180339887498949,0.3819660112501051],[1.0,0.0]]}"#,
    );
    let out = cms(
        dir.path(),
        &[
            "dualvp",
            "--shift",
            "golden.json",
            "--potential",
            "zero.json",
            "--measure",
            "parry.json",
            "--depth",
            "2",
            "--symbols",
            "2",
            "--seed",
            "7",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    assert!(r["gap"].as_f64().unwrap().abs() < 1e-3);
    assert!(r["min_slack"].as_f64().unwrap() > -1e-10);
}

#[test]
fn experiment_config_runs() {
    let dir = fixtures();
    write(
        &dir,
        "exp.json",
        r#"{"command":"pressure","shift":"golden_loops.json","potential":"zero.json","params":{"method":"loop"},"out":"p.json","csv":"p.csv"}"#,
    );
    let sub = dir.path().join("elsewhere");
    fs::create_dir(&sub).unwrap();
    let out = cms(&sub, &["run", "--config", "../exp.json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(r["method"], "loop_generating_function");
    assert!(dir.path().join("p.csv").exists());

    write(
        &dir,
        "noseed.json",
        r#"{"command":"dichotomy","shift":"full.json"}"#,
    );
    let out = cms(dir.path(), &["run", "--config", "noseed.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    write(
        &dir,
        "typo.json",
        r#"{"command":"classify","shfit":"full.json"}"#,
    );
    let out = cms(dir.path(), &["run", "--config", "typo.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shfit"));
}
