use std::path::{Path, PathBuf};

use hamsim_core::suites::{Bound, Check};
use serde::Serialize;
use toml::Table;

/// Everything a subcommand produces.
pub struct Outcome {
    pub command: &'static str,
    pub module: &'static str,
    pub params: Table,
    pub results: Table,
    pub checks: Vec<Check>,
    pub csv: String,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn new(command: &'static str, module: &'static str, params: Table) -> Self {
        Self {
            command,
            module,
            params,
            results: Table::new(),
            checks: Vec::new(),
            csv: String::new(),
            files: Vec::new(),
        }
    }

    pub fn set<T: Serialize + ?Sized>(&mut self, key: &str, v: &T) {
        if let Ok(value) = toml::Value::try_from(v) {
            self.results.insert(key.to_string(), value);
        }
    }

    pub fn check(&mut self, case: &str, metric: &str, measured: f64, allowed: f64, bound: Bound) {
        self.checks.push(Check::new(case, metric, measured, allowed, bound));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Serialize)]
struct Document<'a> {
    run: Table,
    params: &'a Table,
    results: &'a Table,
    checks: &'a [Check],
}

#[derive(Serialize)]
pub struct FailureRecord {
    pub module: String,
    pub operation: String,
    pub case: String,
    pub metric: String,
    pub measured: f64,
    pub allowed: f64,
    pub message: String,
}

#[derive(Serialize)]
struct FailureDocument<'a> {
    failures: &'a [FailureRecord],
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

pub fn results_document(o: &Outcome) -> Result<String, String> {
    let mut run = Table::new();
    run.insert("command".into(), o.command.into());
    run.insert("module".into(), o.module.into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("passed".into(), o.passed().into());
    let doc = Document {
        run,
        params: &o.params,
        results: &o.results,
        checks: &o.checks,
    };
    toml::to_string(&doc).map_err(|e| e.to_string())
}

/// Writes `<stem>.toml`, `<stem>.csv`, extra files and, when a check
/// failed, `<stem>.failure.toml`. Returns the failure records.
pub fn persist(o: &Outcome, dir: &Path, stem: &str) -> Result<Vec<FailureRecord>, String> {
    write(dir, &format!("{stem}.toml"), &results_document(o)?)?;
    if !o.csv.is_empty() {
        write(dir, &format!("{stem}.csv"), &o.csv)?;
    }
    for (name, text) in &o.files {
        write(dir, name, text)?;
    }
    let failures: Vec<FailureRecord> = o
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| FailureRecord {
            module: o.module.into(),
            operation: o.command.into(),
            case: c.case.clone(),
            metric: c.metric.clone(),
            measured: c.measured,
            allowed: c.allowed,
            message: "tolerance exceeded".into(),
        })
        .collect();
    let failure_path = dir.join(format!("{stem}.failure.toml"));
    if failures.is_empty() {
        let _ = std::fs::remove_file(failure_path);
    } else {
        write_failures(dir, stem, &failures)?;
    }
    Ok(failures)
}

pub fn write_failures(dir: &Path, stem: &str, failures: &[FailureRecord]) -> Result<PathBuf, String> {
    let text = toml::to_string(&FailureDocument { failures }).map_err(|e| e.to_string())?;
    write(dir, &format!("{stem}.failure.toml"), &text)
}

pub fn failure_line(f: &FailureRecord) -> String {
    format!(
        "failure module={} operation={} case={} metric={} measured={:.6e} allowed={:.6e} message={:?}",
        f.module, f.operation, f.case, f.metric, f.measured, f.allowed, f.message
    )
}
