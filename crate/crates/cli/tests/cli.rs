use std::path::Path;
use std::process::{Command, Output};

fn hamsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamsim"))
        .args(args)
        .env("HAMSIM_OUT_DIR", dir)
        .output()
        .expect("run hamsim")
}

fn results(dir: &Path, stem: &str) -> toml::Table {
    let text = std::fs::read_to_string(dir.join(format!("{stem}.toml"))).expect("results document");
    text.parse().expect("valid toml")
}

fn float(doc: &toml::Table, key: &str) -> f64 {
    let v = &doc["results"][key];
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).expect("number")
}

#[test]
fn simulate_meets_requested_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsim(dir.path(), &["simulate", "--dim", "16", "--d", "4", "--eps", "1e-4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = results(dir.path(), "simulate");
    assert!(float(&doc, "measured_error") <= 1e-4);
    assert_eq!(doc["run"]["passed"].as_bool(), Some(true));
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    assert!(csv.starts_with("window,lo,hi,"));
}

#[test]
fn lowerbound_reports_parity_and_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsim(dir.path(), &["lowerbound", "--n", "3", "--m", "2", "--s", "2", "--x", "10,00,01"]);
    assert!(out.status.success());
    let doc = results(dir.path(), "lowerbound");
    assert_eq!(doc["results"]["parity"].as_integer(), Some(0));
    assert!(float(&doc, "fidelity") >= 1.0 - 1e-9);
}

#[test]
fn cost_sweep_is_monotone_in_d() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsim(dir.path(), &["cost", "--sweep", "d"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("cost.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("formula,t,d,eps,m,value"));
    let values: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 11);
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn empty_suite_name_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsim(dir.path(), &["regress", ""]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("suite name"));
    let out = hamsim(dir.path(), &["regress", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hamsim(dir.path(), &["regress"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn regress_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = hamsim(dir.path(), &["regress", "recursion", "--quick", "--seed", "11"]);
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("regress-recursion.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let c = tempfile::tempdir().unwrap();
    hamsim(c.path(), &["regress", "recursion", "--quick", "--seed", "12"]);
    assert_ne!(read(&a), read(&c));
}

#[test]
fn generated_instance_feeds_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsim(dir.path(), &["gen", "--dim", "8", "--d", "3", "--profile", "log-uniform", "--seed", "5"]);
    assert!(out.status.success());
    let inst = dir.path().join("instance.txt");
    assert!(dir.path().join("instance.meta.toml").exists());
    let gen = results(dir.path(), "gen");
    let out = hamsim(dir.path(), &["norms", "--input", inst.to_str().unwrap()]);
    assert!(out.status.success());
    let norms = results(dir.path(), "norms");
    assert_eq!(float(&gen, "spectral"), float(&norms, "spectral"));
    let out = hamsim(dir.path(), &["encode", "--input", inst.to_str().unwrap(), "--factor", "1"]);
    assert!(out.status.success());
}

#[test]
fn lower_bound_instance_exports_to_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("por.txt");
    let out = hamsim(dir.path(), &["lowerbound", "--n", "2", "--m", "1", "--s", "1", "--export", file.to_str().unwrap()]);
    assert!(out.status.success());
    let out = hamsim(dir.path(), &["norms", "--input", file.to_str().unwrap()]);
    assert!(out.status.success());
    let lb = results(dir.path(), "lowerbound");
    let norms = results(dir.path(), "norms");
    // entries are rounded to 16 fractional bits on export
    assert!((float(&lb, "one_to_two") - float(&norms, "one_to_two")).abs() < 1e-4);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[run]\nseed = 9\n[dilate]\ndim = 3\n").unwrap();
    let out = hamsim(dir.path(), &["dilate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let doc = results(dir.path(), "dilate");
    assert_eq!(doc["params"]["dim"].as_integer(), Some(3));
    assert_eq!(doc["params"]["seed"].as_integer(), Some(9));
    let out = hamsim(dir.path(), &["dilate", "--config", cfg.to_str().unwrap(), "--dim", "5"]);
    assert!(out.status.success());
    assert_eq!(results(dir.path(), "dilate")["results"]["dim"].as_integer(), Some(10));
}

#[test]
fn example_config_parses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("config.example.toml");
    let out = hamsim(dir.path(), &["cost", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn computation_failure_leaves_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsim(dir.path(), &["encode", "--dim", "4", "--d", "2", "--factor", "50"]);
    assert_eq!(out.status.code(), Some(1));
    let rec: toml::Table = std::fs::read_to_string(dir.path().join("encode.failure.toml")).unwrap().parse().unwrap();
    let f = &rec["failures"][0];
    assert_eq!(f["module"].as_str(), Some("blockenc"));
    assert_eq!(f["operation"].as_str(), Some("amplitude_multiply"));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("failure module=blockenc"));
}

#[test]
fn sweep_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsim(dir.path(), &["sweep", "--param", "eps", "--values", "1e-2,1e-3", "--d", "4", "--svg"]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}
