use std::path::Path;
use std::process::{Command, Output};

fn hpadic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpadic")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn tempdir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("hpadic-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&hpadic(&["symbols", "--label", "99z9"])), 2);
    assert!(stderr(&hpadic(&["symbols", "--label", "99z9"])).contains("unknown curve label"));
    assert_eq!(code(&hpadic(&["--precision", "32", "symbols", "--label", "11a1"])), 2);
    assert_eq!(code(&hpadic(&["verify", "everything"])), 2);
    assert_eq!(code(&hpadic(&["frobnicate"])), 2);
    assert_eq!(code(&hpadic(&["theta", "--label", "11a1", "--primes", "7", "--sign", "2"])), 2);
}

#[test]
fn symbols_skip_bad_moduli_and_replay_from_cache() {
    let dir = tempdir("symbols");
    let cache = dir.join("cache");
    let cache = cache.to_str().unwrap();
    let args = ["--cache", cache, "--format", "csv", "--bound", "14", "symbols", "--label", "11a1"];
    let first = hpadic(&args);
    assert_eq!(code(&first), 0);
    assert!(stderr(&first).contains("skipping q = 11"));
    let rows: Vec<String> = stdout(&first).lines().map(String::from).collect();
    assert!(rows.iter().any(|r| r == "11a1,0,1,1/5,0,2,0"));
    assert!(!rows.iter().any(|r| r.starts_with("11a1,1,11,")));
    let cached = Path::new(cache).join("symbols").join("11a1-p192.csv");
    assert!(cached.exists());
    let second = hpadic(&args);
    assert_eq!(first.stdout, second.stdout);

    // a precision change uses its own cache file
    let other = hpadic(&["--cache", cache, "--precision", "160", "--bound", "5", "symbols", "--label", "11a1"]);
    assert_eq!(code(&other), 0);
    assert!(Path::new(cache).join("symbols").join("11a1-p160.csv").exists());
}

#[test]
fn reports_embed_config_and_version() {
    let o = hpadic(&["--bound", "2000", "tw-sieve", "--labels", "11a1", "--p", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["bound"], 2000);
    assert_eq!(v["config"]["precision"], 192);
    assert_eq!(v["result"]["predicted_density"], "1/3");
    let csv = hpadic(&["--bound", "2000", "--format", "csv", "kato-sieve", "--label", "37a1", "--p", "3"]);
    let text = stdout(&csv);
    assert!(text.starts_with("# hpadic"));
    assert!(text.lines().nth(1).unwrap() == "label,p,m,ell");
}

#[test]
fn nu_reports_reload_and_reverify() {
    let dir = tempdir("nu");
    let o = hpadic(&["nu", "--label", "11a1", "--p", "3", "--tail", "7,13"]);
    assert_eq!(code(&o), 0);
    let path = dir.join("nu.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let ok = hpadic(&["verify", "interp", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));

    let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    v["result"]["nu"]["coeffs"][1] = serde_json::Value::String("4".into());
    std::fs::write(&path, v.to_string()).unwrap();
    let bad = hpadic(&["--format", "text", "verify", "interp", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("FAIL"));
}

#[test]
fn nu_validates_its_inputs() {
    let empty = hpadic(&["--format", "text", "nu", "--label", "11a1", "--p", "3"]);
    assert_eq!(code(&empty), 0);
    assert_eq!(stdout(&empty).lines().count(), 2);
    // 7 has a_7 = −2 ≡ 2 mod 3 on 37a1, so it is a Kato prime there
    let kato = hpadic(&["nu", "--label", "37a1", "--p", "3", "--tail", "7"]);
    assert_eq!(code(&kato), 2);
    assert!(stderr(&kato).contains('7'));
    let big = hpadic(&["nu", "--label", "11a1", "--p", "2", "--tail", "257,193", "--evaluate-all"]);
    assert_eq!(code(&big), 2);
    assert!(stderr(&big).contains("limit"));
}

#[test]
fn measure_suite_is_deterministic_and_catches_corruption() {
    let a = hpadic(&["--seed", "7", "verify", "measures", "--count", "40"]);
    let b = hpadic(&["--seed", "7", "verify", "measures", "--count", "40"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let bad = hpadic(&["--seed", "7", "verify", "measures", "--count", "10", "--corrupt"]);
    assert_eq!(code(&bad), 1);
    let v: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["result"]["failures"].as_array().unwrap().len(), 10);
}

#[test]
fn census_suite_reports_fits() {
    let o = hpadic(&["--threads", "1", "verify", "census", "--fit-bound", "20000"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["extra"]["fits"].as_array().unwrap().len(), 2);
    let strict = hpadic(&["verify", "census", "--fit-bound", "20000", "--strict-fit"]);
    assert_eq!(code(&strict), 1);
}

#[test]
fn empty_catalog_skips_curve_suites() {
    let dir = tempdir("empty");
    let cat = dir.join("empty.csv");
    std::fs::write(&cat, "").unwrap();
    for suite in ["normrel", "interp", "kurihara"] {
        let o = hpadic(&["--catalog", cat.to_str().unwrap(), "verify", suite]);
        assert_eq!(code(&o), 0);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["result"]["skipped"][0], "catalog is empty");
    }
}

#[test]
fn small_suites_pass() {
    let o = hpadic(&["--bound", "40", "verify", "normrel", "--labels", "11a1,37a1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let k = hpadic(&["--bound", "100", "verify", "kurihara", "--labels", "11a1"]);
    assert_eq!(code(&k), 0, "{}", stdout(&k));
}

#[test]
fn kurihara_certificate_for_a_rank_one_curve() {
    let o = hpadic(&["kurihara", "--label", "37a1", "--p", "3", "--tail", "13", "--kolyvagin"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v["result"];
    assert_eq!(r["datum"]["Q"][0], 7);
    assert_ne!(r["datum"]["residue"], 0);
    assert_eq!(r["congruence"]["holds"], true);
    assert_eq!(r["kolyvagin"]["holds"], true);
}
