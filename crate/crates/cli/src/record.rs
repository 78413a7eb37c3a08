use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use beltrami_core::Mat2;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// One asserted invariant and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub relation: &'static str,
}

/// Headline numbers of a run at its finest resolution, used by sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Headline {
    pub resolution: Option<usize>,
    pub min_det_du: Option<f64>,
    pub sigma_eff: Option<Mat2>,
    pub sigma_eff_error: Option<f64>,
    pub bmo: Option<f64>,
    pub c: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub task: String,
    pub resolutions: Vec<usize>,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    pub headline: Headline,
    pub all_passed: bool,
}

impl RunRecord {
    pub fn new(task: &str, resolutions: Vec<usize>) -> Self {
        RunRecord {
            task: task.to_string(),
            resolutions,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            headline: Headline::default(),
            all_passed: true,
        }
    }

    fn push(&mut self, name: String, passed: bool, value: f64, bound: f64, relation: &'static str) {
        if !passed {
            tracing::warn!(check = %name, value, bound, relation, "check failed");
        }
        self.all_passed &= passed;
        self.checks.push(Check { name, passed, value, bound, relation });
    }

    /// Passes when `value ≤ bound` (NaN fails).
    pub fn check_le(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name.into(), value <= bound, value, bound, "<=")
    }

    /// Passes when `value > bound` (NaN fails).
    pub fn check_gt(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name.into(), value > bound, value, bound, ">")
    }

    /// Passes when `value ≥ bound` (NaN fails).
    pub fn check_ge(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name.into(), value >= bound, value, bound, ">=")
    }

    pub fn check_flag(&mut self, name: impl Into<String>, flag: bool) {
        self.push(name.into(), flag, f64::from(u8::from(flag)), 1.0, "==")
    }

    pub fn metric(&mut self, name: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(name.into(), v);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Output directory that remembers what was written into it.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io_err = |e| CliError::Io { path: path.clone(), source: e };
        let mut file = std::io::BufWriter::new(fs::File::create(&path).map_err(io_err)?);
        f(&mut file).and_then(|_| file.flush()).map_err(io_err)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn into_names(self) -> Vec<String> {
        self.written
    }
}

/// Shortest round-trip representation; identical inputs give identical text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
