use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ghk_core::dual::dual_rec;
use ghk_core::families::{random_function, Family};
use ghk_core::gowers::{gowers_eval, Algo};
use ghk_core::io::{read_grid, write_grid};
use serde_json::Value;
use tempfile::TempDir;

fn ghk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghk")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn sample(dir: &TempDir, name: &str, family: Family, seed: u64) -> PathBuf {
    let p = dir.path().join(name);
    write_grid(&p, &random_function(family, 1, 8, 0.125, seed).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exponents_match_golden() {
    for k in [2, 3, 4] {
        let o = ghk(&["exponents", "--k", &k.to_string()]);
        assert!(o.status.success());
        assert_eq!(stdout(&o), golden(&format!("exponents_k{k}.json")), "k = {k}");
    }
}

#[test]
fn exponents_k3_fractions() {
    let v: Value = serde_json::from_str(&stdout(&ghk(&["exponents", "--k", "3"]))).unwrap();
    assert_eq!(v["p"], "2");
    assert_eq!(v["q"], "7/3");
    assert_eq!(v["s"], "2");
}

#[test]
fn exponents_reject_k1() {
    let o = ghk(&["exponents", "--k", "1"]);
    assert!(!o.status.success());
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(e["error"].is_string() && e["message"].is_string());
}

#[test]
fn spectral_norm_matches_brute() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let p = sample(&dir, "f.ghk", Family::RandomSigned, seed);
        let b: f64 = stdout(&ghk(&["norm", "--k", "2", "--algo", "brute", "--in", s(&p)])).trim().parse().unwrap();
        let sp: f64 = stdout(&ghk(&["norm", "--k", "2", "--algo", "spectral", "--in", s(&p)])).trim().parse().unwrap();
        assert!((b - sp).abs() <= 1e-8 * b, "{b} vs {sp}");
    }
}

#[test]
fn norm_is_a_thin_adapter() {
    let dir = TempDir::new().unwrap();
    let p = sample(&dir, "f.ghk", Family::Tent, 3);
    let f = read_grid(&p).unwrap();
    for (k, algo) in [(2, Algo::Brute), (3, Algo::Rec), (2, Algo::Spectral)] {
        let want = gowers_eval(&f, k, algo).unwrap().value;
        let name = format!("{algo:?}").to_lowercase();
        let got: f64 = stdout(&ghk(&["norm", "--k", &k.to_string(), "--algo", &name, "--in", s(&p)])).trim().parse().unwrap();
        assert_eq!(got.to_bits(), want.to_bits(), "k = {k}, {name}");
    }
}

#[test]
fn missing_input_names_the_path() {
    let o = ghk(&["norm", "--k", "2", "--in", "/definitely/not/here.ghk"]);
    assert!(!o.status.success());
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"], "io");
    assert!(e["message"].as_str().unwrap().contains("/definitely/not/here.ghk"));
}

#[test]
fn malformed_input_is_reported() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.ghk");
    std::fs::write(&p, b"not a grid").unwrap();
    let o = ghk(&["norm", "--k", "2", "--in", s(&p)]);
    assert!(!o.status.success());
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(e["error"].is_string());
}

#[test]
fn unknown_subcommand_fails() {
    assert!(!ghk(&["frobnicate"]).status.success());
}

#[test]
fn help_lists_every_flag() {
    let top = stdout(&ghk(&["--help"]));
    for flag in ["--threads", "--budget"] {
        assert!(top.contains(flag), "{flag}");
    }
    for (sub, flags) in [
        ("norm", &["--k", "--algo", "--in", "--json"][..]),
        ("dual", &["--k", "--algo", "--in", "--out"][..]),
        ("dualnorm", &["--delta", "--out", "--seed"][..]),
        ("decompose", &["--delta", "--out-f", "--out-h", "--report"][..]),
        ("verify", &["--config", "--out", "--replay", "--seed"][..]),
        ("bench", &["--kernel", "--sizes", "--reps", "--out"][..]),
    ] {
        let h = stdout(&ghk(&[sub, "--help"]));
        for flag in flags {
            assert!(h.contains(flag), "{sub} {flag}");
        }
    }
}

#[test]
fn empty_bench_is_header_only() {
    let o = ghk(&["bench", "--sizes", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "kernel,N,d,median_ms,work_count\n");
}

#[test]
fn bench_rows_follow_schema() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("b.csv");
    let o = ghk(&["bench", "--kernel", "u2-brute", "--kernel", "u3-rec", "--sizes", "4,8", "--reps", "1", "--out", s(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("u2-brute,4,1,"));
    assert!(lines[4].starts_with("u3-rec,8,1,"));
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 5);
    }
}

#[test]
fn dual_writes_the_library_result() {
    let dir = TempDir::new().unwrap();
    let p = sample(&dir, "f.json", Family::RandomSigned, 9);
    let out = dir.path().join("d.ghk");
    assert!(ghk(&["dual", "--k", "3", "--in", s(&p), "--out", s(&out)]).status.success());
    let want = dual_rec(&read_grid(&p).unwrap(), 3).unwrap();
    assert_eq!(read_grid(&out).unwrap(), want);
}

#[test]
fn inner_of_repeated_file_is_norm_power() {
    let dir = TempDir::new().unwrap();
    let p = sample(&dir, "f.ghk", Family::RandomNonneg, 4);
    let n: f64 = stdout(&ghk(&["norm", "--k", "2", "--algo", "brute", "--in", s(&p)])).trim().parse().unwrap();
    let t: f64 = stdout(&ghk(&["inner", "--k", "2", "--in", s(&p)])).trim().parse().unwrap();
    assert!((t - n.powi(4)).abs() <= 1e-12 * t);
}

#[test]
fn decompose_report_is_complete() {
    let dir = TempDir::new().unwrap();
    let p = sample(&dir, "g.ghk", Family::RandomNonneg, 2);
    let (ff, hh, rep) = (dir.path().join("F.ghk"), dir.path().join("H.ghk"), dir.path().join("r.json"));
    let o = ghk(&["decompose", "--k", "2", "--delta", "0.5", "--in", s(&p), "--out-f", s(&ff), "--out-h", s(&hh), "--report", s(&rep)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    for key in [
        "k", "delta", "scale", "C", "iterations", "converged", "stationarity_residual", "spill",
        "unreachable_cells", "reconstruction_exact", "residual_history", "norms", "domain", "F", "H",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["norms"]["f_p"].as_f64().unwrap() <= 2.0 * (1.0 + 1e-6));
    assert!(read_grid(&ff).is_ok() && read_grid(&hh).is_ok());
}

#[test]
fn decompose_rejects_bad_delta() {
    let dir = TempDir::new().unwrap();
    let p = sample(&dir, "g.ghk", Family::RandomNonneg, 2);
    let o = ghk(&["decompose", "--k", "2", "--delta", "1.5", "--in", s(&p)]);
    assert!(!o.status.success());
}

#[test]
fn budget_flag_is_enforced() {
    let dir = TempDir::new().unwrap();
    let p = sample(&dir, "f.ghk", Family::RandomNonneg, 1);
    let o = ghk(&["--budget", "10", "norm", "--k", "3", "--algo", "brute", "--in", s(&p)]);
    assert!(!o.status.success());
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"], "budget-exceeded");
}

#[test]
fn empty_config_gives_empty_report() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{}").unwrap();
    let o = ghk(&["verify", "--config", s(&cfg)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_is_thread_independent() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"ks":[2,3],"dims":[1],"sizes":[4],"reps":3,"checks":["eq1.3-oracle","eq1.5-csg","dual-pairing","eq2.3-floor"]}"#,
    )
    .unwrap();
    let a = ghk(&["--threads", "1", "verify", "--config", s(&cfg)]);
    let b = ghk(&["--threads", "4", "verify", "--config", s(&cfg)]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn replay_reruns_one_instance() {
    let o = ghk(&["verify", "--replay", "eq1.3-oracle", "--k", "2", "--dim", "1", "--n", "4", "--family", "tent", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["name"], "eq1.3-oracle");
}
