use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn swipt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swipt"))
        .args(args)
        .env_remove("SWIPT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_REGION: &str = r#"
p_a = 5.0
r_p = [4.0]
seed = 7

[power]
raw = [0.01, 0.01, 0.01]

[grid]
mode = "step"
start = 0.56
step = 0.1
"#;

#[test]
fn selftest_passes_and_reports_json() {
    let o = swipt(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));

    let o = swipt(&["selftest", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn tampered_series_constant_fails_by_name() {
    let o = swipt(&["selftest", "--tamper", "S5=0.34"]);
    assert_eq!(o.status.code(), Some(1));
    let failing: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with("FAIL"))
        .map(str::to_owned)
        .collect();
    assert_eq!(failing.len(), 1, "{failing:?}");
    assert!(failing[0].contains("sinc-series:S5"));
}

#[test]
fn infeasible_floor_exits_one_with_the_edge() {
    let o = swipt(&["capacity", "--r-p", "4", "--p-d", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("0.86"), "{err}");
}

#[test]
fn capacity_json_is_reproducible_for_a_fixed_seed() {
    let args = ["capacity", "--r-p", "4", "--p-d", "0.3", "--seed", "11", "--json"];
    let a = swipt(&args);
    let b = swipt(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["verified"], true);
}

#[test]
fn capacity_without_floor_reaches_the_gaussian_rate() {
    let o = swipt(&["capacity", "--r-p", "50", "--p-d", "0"]);
    let text = stdout(&o);
    let rate: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rate"))
        .and_then(|l| l.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .expect("rate line");
    assert!((rate - 1.2528).abs() < 1e-3, "{text}");
    // An infinite-looking peak never closes the KKT gap, so 2 is expected.
    assert!(matches!(o.status.code(), Some(0 | 2)));
}

#[test]
fn bits_change_only_the_display() {
    let nats = stdout(&swipt(&["gaussian-rp"]));
    let bits = stdout(&swipt(&["gaussian-rp", "--bits"]));
    let first = |s: &str| -> f64 {
        s.lines().nth(1).unwrap().split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    assert!((first(&nats) / first(&bits) - std::f64::consts::LN_2).abs() < 1e-8);
    let csv_n = swipt(&["gaussian-rp", "--csv"]).stdout;
    let csv_b = swipt(&["gaussian-rp", "--csv", "--bits"]).stdout;
    assert_eq!(csv_n, csv_b);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "p_a = 5.0\nmystery = 3\n").unwrap();
    let o = swipt(&["--config", path.to_str().unwrap(), "gaussian-rp"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mystery"), "{}", stderr(&o));
}

#[test]
fn verify_kkt_flags_a_non_optimal_law() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    fs::write(&path, r#"{"peak": 4.0, "points": [[1.0, 0.5], [3.0, 0.5]]}"#).unwrap();
    let o = swipt(&["verify-kkt", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("NOT verified"));
}

#[test]
fn power_of_gaussian_endpoints() {
    let o = swipt(&["power", "--p-i", "2.5"]);
    assert!(stdout(&o).contains("0.560000000000"), "{}", stdout(&o));
    let o = swipt(&["power", "--p-i", "0"]);
    assert!(stdout(&o).contains("0.810000000000"), "{}", stdout(&o));
}

#[test]
fn timeshare_demo_gap_shrinks() {
    let o = swipt(&["timeshare-demo", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| r["gap"].as_f64().unwrap()).collect();
    assert_eq!(gaps.len(), 4);
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn rp_region_is_thread_count_independent_and_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, SMALL_REGION).unwrap();
    let cfg = cfg.to_str().unwrap();
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    let dumped = dir.path().join("effective.toml");

    let o = swipt(&[
        "--config", cfg, "--threads", "1", "-o", one.to_str().unwrap(),
        "--dump-config", dumped.to_str().unwrap(), "rp-region",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = swipt(&["--config", cfg, "--threads", "4", "-o", four.to_str().unwrap(), "rp-region"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = listing(&one);
    assert!(a.iter().any(|(n, _)| n.ends_with(".json")));
    assert!(a.iter().any(|(n, _)| n.starts_with("traj_")));
    assert_eq!(a, listing(&four));

    // Re-running from the dumped file reproduces the outputs.
    let again = dir.path().join("again");
    let o = swipt(&["--config", dumped.to_str().unwrap(), "-o", again.to_str().unwrap(), "rp-region"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(a, listing(&again));
}
