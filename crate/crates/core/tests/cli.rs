use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_markov-regress"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn corpus(target: &str, name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target).join(name)
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(out: &Path, seed: u64) -> Vec<u8> {
    ok(bin()
        .args(["simulate", "--config"])
        .arg(corpus("experiment_config", "small.json"))
        .args(["--seed", &seed.to_string(), "--output"])
        .arg(out)
        .output()
        .unwrap());
    std::fs::read(out.join("sgd.csv")).unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(&dir.path().join("a"), 9);
    let b = simulate(&dir.path().join("b"), 9);
    let c = simulate(&dir.path().join("c"), 10);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with(b"t,mean_excess,stderr,min,max\n"));
    assert!(dir.path().join("a/sgd.json").is_file());
    assert!(dir.path().join("a/excess_risk.svg").is_file());
}

#[test]
fn simulate_uses_output_root() {
    let dir = tempfile::tempdir().unwrap();
    ok(bin()
        .env("MARKOV_REGRESS_OUT", dir.path())
        .args(["simulate", "--config"])
        .arg(corpus("experiment_config", "small.json"))
        .output()
        .unwrap());
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn sweep_two_by_three() {
    let dir = tempfile::tempdir().unwrap();
    ok(bin()
        .args(["sweep", "--config"])
        .arg(corpus("experiment_config", "small.json"))
        .arg("--grid")
        .arg(corpus("sweep_grid", "two_by_three.json"))
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap());
    let mut csvs = Vec::new();
    for e in std::fs::read_dir(dir.path()).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            csvs.push(p.join("sgd.csv"));
        }
    }
    assert_eq!(csvs.len(), 6);
    assert!(csvs.iter().all(|p| p.is_file()));
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(index["cells"].as_array().unwrap().len(), 6);
}

#[test]
fn sweep_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(corpus("experiment_config", "small.json"))
        .arg("--grid")
        .arg(corpus("sweep_grid", "two_by_three.json"))
        .arg("--output")
        .arg(dir.path())
        .args(["--max-cells", "5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn mixing_report() {
    let text = ok(bin().args(["mixing", "--chain"]).arg(configs().join("chain_mc0.json")).output().unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["tau_mix"], 8);
}

#[test]
fn missing_file_names_path() {
    let out = bin().args(["mixing", "--chain", "/nonexistent/chain.json"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/chain.json"));
}

#[test]
fn accept_mixing_suite() {
    let text = ok(bin().args(["accept", "--suite", "mixing", "--fast", "--strict"]).output().unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let criteria = v["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 1);
    assert_eq!(criteria[0]["id"], 7);
    assert_eq!(criteria[0]["verdict"], "PASS");
}

#[test]
fn validate_spectra_prints_each_lemma() {
    let text = ok(bin().args(["validate", "spectra", "--fast"]).output().unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.starts_with("PASS ")), "{text}");
}
