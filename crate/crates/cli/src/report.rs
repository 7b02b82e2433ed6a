use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, status: Outcome) -> Self {
        Check {
            name: name.into(),
            status,
            residual: None,
            detail: Value::Null,
        }
    }

    /// Passes when `residual <= tol`.
    pub fn residual(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        let status = if residual <= tol { Outcome::Pass } else { Outcome::Fail };
        Check {
            residual: Some(residual),
            ..Check::new(name, status)
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub undecided: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub checks: Vec<Check>,
    pub max_residual: f64,
    pub witnesses: Vec<Value>,
    /// Measured quantities that are not pass/fail checks.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub info: serde_json::Map<String, Value>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, inputs: Vec<String>, checks: Vec<Check>, witnesses: Vec<Value>) -> Self {
        let mut summary = Summary::default();
        for c in &checks {
            match c.status {
                Outcome::Pass => summary.pass += 1,
                Outcome::Fail => summary.fail += 1,
                Outcome::Undecided => summary.undecided += 1,
            }
        }
        let max_residual = checks.iter().filter_map(|c| c.residual).fold(0.0, f64::max);
        SuiteReport {
            suite: suite.to_string(),
            seed,
            inputs,
            checks,
            max_residual,
            witnesses,
            info: serde_json::Map::new(),
            summary,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SuiteStats {
    pub runs: usize,
    pub checks: usize,
    pub pass: usize,
    pub fail: usize,
    pub undecided: usize,
    pub failed_runs: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub failures: usize,
    pub suites: BTreeMap<String, SuiteStats>,
    pub files: Vec<String>,
}

/// Reads every `*.json` report in `dir`, in file-name order.
pub fn aggregate(dir: &Path) -> Result<Aggregate, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Empty(format!("{} has no reports", dir.display())));
    }
    let mut suites: BTreeMap<String, SuiteStats> = BTreeMap::new();
    let mut files = Vec::with_capacity(paths.len());
    for p in &paths {
        let r: SuiteReport = crate::parse(p)?;
        let s = suites.entry(r.suite.clone()).or_default();
        s.runs += 1;
        s.checks += r.checks.len();
        s.pass += r.summary.pass;
        s.fail += r.summary.fail;
        s.undecided += r.summary.undecided;
        s.failed_runs += usize::from(r.summary.fail > 0);
        s.max_residual = s.max_residual.max(r.max_residual);
        files.push(p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
    }
    Ok(Aggregate {
        runs: paths.len(),
        failures: suites.values().map(|s| s.fail).sum(),
        suites,
        files,
    })
}

pub fn summary_text(a: &Aggregate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} run(s), {} suite(s), {} failure(s)", a.runs, a.suites.len(), a.failures);
    for (name, st) in &a.suites {
        let _ = writeln!(
            s,
            "  {name:<12} runs {:>3}  pass {:>4}  fail {:>3}  undecided {:>3}  max residual {:.3e}",
            st.runs, st.pass, st.fail, st.undecided, st.max_residual
        );
    }
    s
}
