use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_schwarz")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn invoke(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_in(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let out = dir.to_string_lossy().into_owned();
    let mut args = vec![sub, "--config", config, "--out", &out];
    args.extend_from_slice(extra);
    invoke(&args)
}

const DIAGONAL: &str = r#"
seed = 1
steps = STEPS
trials = 50
[problem]
kind = "diagonal"
coefficients = [0.6, -0.3, 0.2]
[selection]
kind = "random"
distribution = { kind = "explicit", weights = [0.5, 0.3, 0.2] }
[relaxation]
kind = "RELAX"
[output]
bounds = true
"#;

fn diagonal(steps: usize, relax: &str) -> String {
    DIAGONAL.replace("STEPS", &steps.to_string()).replace("RELAX", relax)
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn zero_steps_give_a_single_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &diagonal(0, "gawr"));
    let out = run_in(dir.path(), "run", &cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&dir.path().join("trace.csv"));
    assert_eq!(r.len(), 2);
    assert_eq!(r[0].join(","), "m,index,alpha,omega,local_norm,error_a,error_a_sq,random_bound");
    assert_eq!(r[1][0], "0");
    assert!(r[1][1..5].iter().all(String::is_empty));
    let e: f64 = r[1][5].parse().unwrap();
    assert!((e - (0.49f64).sqrt()).abs() < 1e-15);
}

#[test]
fn every_row_matches_the_header_width() {
    let dir = TempDir::new().unwrap();
    for (sub, relax) in [("run", "gawr"), ("run", "two_param"), ("expect", "pure"), ("expect", "gawr"), ("bounds", "gawr")] {
        let cfg = write_config(dir.path(), &diagonal(12, relax));
        let out = run_in(dir.path(), sub, &cfg, &[]);
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        let r = rows(&dir.path().join("trace.csv"));
        assert_eq!(r.len(), 14, "{sub}");
        for row in &r {
            assert_eq!(row.len(), r[0].len(), "{sub} {relax}: {row:?}");
        }
        for row in &r[1..] {
            // 17 significant digits in scientific notation
            let x = row.last().unwrap();
            if !x.is_empty() {
                let mantissa = x.split('e').next().unwrap().trim_start_matches('-');
                assert_eq!(mantissa.len(), 18, "{x}");
            }
        }
    }
}

#[test]
fn expect_reports_all_three_oracles() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &diagonal(10, "pure"));
    let out = run_in(dir.path(), "expect", &cfg, &[]);
    assert!(out.status.success());
    let r = rows(&dir.path().join("trace.csv"));
    assert_eq!(r[0].join(","), "m,mean_err_sq,stderr,K,random_bound,exact,bruteforce");
    for row in &r[1..] {
        let m: usize = row[0].parse().unwrap();
        let exact: f64 = row[5].parse().unwrap();
        assert_eq!(row[3], "50");
        if m <= 8 {
            let brute: f64 = row[6].parse().unwrap();
            assert!((exact - brute).abs() <= 1e-12);
        } else {
            assert!(row[6].is_empty());
        }
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["oracles"]["max_exact_bruteforce_gap"].as_f64().unwrap() <= 1e-12);
    assert_eq!(summary["constants"]["norms"]["a1"]["kind"], "exact");

    // the oracles only apply to pure steps
    let cfg = write_config(dir.path(), &diagonal(10, "gawr"));
    assert!(run_in(dir.path(), "expect", &cfg, &[]).status.success());
    assert_eq!(rows(&dir.path().join("trace.csv"))[0].join(","), "m,mean_err_sq,stderr,K,random_bound");
}

#[test]
fn identical_inputs_give_identical_bytes() {
    for sub in ["run", "expect", "check", "rate"] {
        let a = TempDir::new().unwrap();
        let b = TempDir::new().unwrap();
        let text = diagonal(30, "gawr");
        let ca = write_config(a.path(), &text);
        let cb = write_config(b.path(), &text);
        let oa = run_in(a.path(), sub, &ca, &["--seed", "99"]);
        let ob = run_in(b.path(), sub, &cb, &["--seed", "99"]);
        assert!(oa.status.success() && ob.status.success(), "{sub}");
        for name in ["trace.csv", "summary.json"] {
            let pa = a.path().join(name);
            if pa.exists() {
                assert_eq!(fs::read(&pa).unwrap(), fs::read(b.path().join(name)).unwrap(), "{sub} {name}");
            }
        }
    }
}

#[test]
fn seed_override_changes_the_run_and_the_hash() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &diagonal(30, "gawr"));
    let mut seen = Vec::new();
    for seed in ["1", "2"] {
        assert!(run_in(dir.path(), "run", &cfg, &["--seed", seed]).status.success());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["seed"], seed);
        seen.push((fs::read(dir.path().join("trace.csv")).unwrap(), summary["config_sha256"].clone()));
    }
    assert_ne!(seen[0].0, seen[1].0);
    assert_ne!(seen[0].1, seen[1].1);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = [
        diagonal(10, "gawr").replace("steps = 10", "steps = 10\nstepz = 1"),
        diagonal(10, "gawr").replace("kind = \"gawr\"", "kind = \"sor\""),
        diagonal(10, "gawr").replace("[0.5, 0.3, 0.2]", "[0.5, 0.3, 0.3]"),
        diagonal(10, "gawr").replace("distribution = { kind = \"explicit\", weights = [0.5, 0.3, 0.2] }", "distribution = { kind = \"power_law\", s = 0.0 }"),
    ];
    for text in &bad {
        let cfg = write_config(dir.path(), text);
        let out = run_in(dir.path(), "run", &cfg, &[]);
        assert_eq!(out.status.code(), Some(2), "{text}\n{}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let out = invoke(&["run", "--config", "/nonexistent/exp.toml"]);
    assert_eq!(out.status.code(), Some(2));
    // expect needs at least two trials
    let cfg = write_config(dir.path(), &diagonal(10, "gawr").replace("trials = 50", "trials = 1"));
    assert_eq!(run_in(dir.path(), "expect", &cfg, &[]).status.code(), Some(2));
}

#[test]
fn assert_bounds_passes_when_hypotheses_hold() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("greedy_diagonal.toml");
    let out = run_in(dir.path(), "run", cfg.to_str().unwrap(), &["--assert-bounds"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS greedy bound"));
    let r = rows(&dir.path().join("trace.csv"));
    let col = r[0].iter().position(|h| h == "greedy_bound").unwrap();
    for row in &r[1..] {
        let e2: f64 = row[6].parse().unwrap();
        let b: f64 = row[col].parse().unwrap();
        assert!(e2 <= b + 1e-9);
    }
}

#[test]
fn shipped_configs_pass_check() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let dir = TempDir::new().unwrap();
            let out = run_in(dir.path(), "check", path.to_str().unwrap(), &[]);
            let stdout = String::from_utf8_lossy(&out.stdout);
            assert_eq!(out.status.code(), Some(0), "{}:\n{stdout}", path.display());
            assert!(stdout.contains("check: 0 failed"));
        }
    }
}

#[test]
fn rate_and_bounds_print_summaries() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("greedy_diagonal.toml");
    let out = run_in(dir.path(), "rate", cfg.to_str().unwrap(), &[]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["rate"]["slope"].as_f64().unwrap() < 0.0);
    assert!(summary["constants"]["uniform_bound"].as_f64().is_some());

    let cfg = configs().join("dense_cyclic.toml");
    let out = run_in(dir.path(), "bounds", cfg.to_str().unwrap(), &[]);
    assert_eq!(out.status.code(), Some(2));
}
