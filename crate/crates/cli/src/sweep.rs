use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::config::{ExperimentConfig, Task};
use crate::error::CliError;
use crate::record::{fmt_opt, Artifacts, RunRecord};
use crate::tasks;

pub const SWEEP_HEADER: &str =
    "index,task,resolution,status,min_det_du,sigma11,sigma12,sigma21,sigma22,sigma_eff_error,bmo,c,delta,error";

/// Sweep file: inline `[[runs]]` tables and/or paths of single-run configs.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub runs: Vec<ExperimentConfig>,
    #[serde(default)]
    pub configs: Vec<PathBuf>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    /// Resolves relative `configs` entries against `base` and returns every run in order.
    pub fn load(path: &Path) -> Result<Vec<ExperimentConfig>, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let sweep = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut runs = sweep.runs;
        for p in &sweep.configs {
            runs.push(ExperimentConfig::load(&base.join(p))?);
        }
        Ok(runs)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<Result<RunRecord, String>>,
}

impl SweepOutcome {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| matches!(r, Ok(rec) if rec.all_passed))
    }
}

fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Runs every config in sequence under `out/run_NNN` and writes `out/sweep.csv`.
///
/// A failing run is recorded in its row; the sweep continues.
pub fn run_sweep(
    runs: &[ExperimentConfig],
    out: &Path,
    resolution: Option<usize>,
    seed: Option<u64>,
) -> Result<SweepOutcome, CliError> {
    if let Some(first) = runs.first() {
        let task: Task = first.task;
        if let Some(k) = runs.iter().position(|r| r.task != task) {
            return Err(CliError::Validation {
                field: format!("runs[{k}].task"),
                message: format!("sweeps hold one task; expected {}", task.name()),
            });
        }
    }
    let mut artifacts = Artifacts::create(out)?;
    let mut rows = Vec::with_capacity(runs.len());
    let mut records = Vec::with_capacity(runs.len());
    for (k, cfg) in runs.iter().enumerate() {
        let mut cfg = cfg.clone();
        cfg.apply_overrides(resolution, seed);
        let dir = out.join(format!("run_{k:03}"));
        let result = tasks::run(&cfg, &dir);
        let row = match &result {
            Ok(rec) => {
                let h = &rec.headline;
                let m = h.sigma_eff.map(|m| m.0);
                let entry = |i: usize, j: usize| fmt_opt(m.map(|m| m[i][j]));
                format!(
                    "{k},{},{},{},{},{},{},{},{},{},{},{},{},",
                    cfg.task.name(),
                    h.resolution.map(|n| n.to_string()).unwrap_or_default(),
                    if rec.all_passed { "pass" } else { "fail" },
                    fmt_opt(h.min_det_du),
                    entry(0, 0),
                    entry(0, 1),
                    entry(1, 0),
                    entry(1, 1),
                    fmt_opt(h.sigma_eff_error),
                    fmt_opt(h.bmo),
                    fmt_opt(h.c),
                    fmt_opt(h.delta),
                )
            }
            Err(e) => {
                tracing::error!(run = k, error = %e, "sweep run failed");
                format!("{k},{},,error,,,,,,,,,,{}", cfg.task.name(), csv_text(&e.to_string()))
            }
        };
        rows.push(row);
        records.push(result.map_err(|e| e.to_string()));
    }
    artifacts.write("sweep.csv", |w| {
        writeln!(w, "{SWEEP_HEADER}")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    Ok(SweepOutcome { records })
}
