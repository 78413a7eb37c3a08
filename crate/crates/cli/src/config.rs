use std::path::{Path, PathBuf};

use beltrami_core::coefficients::CoefficientSpec;
use beltrami_core::elliptic_solver::SolveOptions;
use beltrami_core::grid::Domain;
use beltrami_core::Mat2;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Convert,
    Solve,
    PrimaryPair,
    Cell,
    Homogenize,
    Diagnose,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Convert => "convert",
            Task::Solve => "solve",
            Task::PrimaryPair => "primary-pair",
            Task::Cell => "cell",
            Task::Homogenize => "homogenize",
            Task::Diagnose => "diagnose",
        }
    }
}

/// Boundary data of the `solve` task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    /// `g(x) = gradient·x + offset`.
    Affine {
        gradient: [f64; 2],
        #[serde(default)]
        offset: f64,
    },
    /// Boundary loop mapped by arclength onto a polygon: a two-component map.
    PolygonTrace { corners: Vec<[f64; 2]> },
    /// One value per boundary-loop vertex.
    Samples { values: Vec<f64> },
}

/// Input of the `convert` task: either a Beltrami pair or a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConvertInput {
    /// `[re, im]`.
    pub mu: Option<[f64; 2]>,
    pub nu: Option<[f64; 2]>,
    pub sigma: Option<Mat2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellOptions {
    pub a: Mat2,
}

impl Default for CellOptions {
    fn default() -> Self {
        CellOptions { a: Mat2::IDENTITY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct HomogenizeOptions {
    /// Reference tensor compared entrywise against σ_eff.
    pub expected: Option<Mat2>,
    /// Relative tolerance `max|σ_eff − expected| / max|expected|`.
    pub relative_tolerance: Option<f64>,
    /// Also compares `|f^{e₁}(Q)|` with `σ_eff e₁·e₁` within this relative gap.
    pub area_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseOptions {
    pub max_level: u32,
    pub exponent: f64,
    pub fractions: Vec<f64>,
    pub random_per_fraction: usize,
    /// Multiples of the Astala exponent at which interior `L^p` norms are taken.
    pub p_fractions: Vec<f64>,
    /// Also evaluates det DV of the factorization `U = V ∘ Φ`.
    pub factorized: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            max_level: 4,
            exponent: 2.0,
            fractions: vec![1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 0.75],
            random_per_fraction: 4,
            p_fractions: vec![0.5, 0.9],
            factorized: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    pub resolution: Option<usize>,
    pub resolutions: Option<Vec<usize>>,
    /// Seed of the subset sampler; random coefficient families carry their own.
    #[serde(default)]
    pub seed: u64,
    pub coefficients: Option<CoefficientSpec>,
    pub boundary: Option<BoundarySpec>,
    pub convert: Option<ConvertInput>,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub cell: CellOptions,
    #[serde(default)]
    pub homogenize: HomogenizeOptions,
    #[serde(default)]
    pub diagnose: DiagnoseOptions,
    pub output_dir: Option<PathBuf>,
}

fn default_domain() -> Domain {
    Domain::UnitSquare
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { field: field.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn resolutions(&self) -> Vec<usize> {
        match (&self.resolutions, self.resolution) {
            (Some(list), _) => list.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => Vec::new(),
        }
    }

    /// Applies the `--resolution` and `--seed` command-line overrides.
    pub fn apply_overrides(&mut self, resolution: Option<usize>, seed: Option<u64>) {
        if let Some(n) = resolution {
            self.resolution = Some(n);
            self.resolutions = None;
        }
        if let Some(s) = seed {
            self.seed = s;
            if let Some(CoefficientSpec::RandomPiecewise { seed, .. }) = &mut self.coefficients {
                *seed = s;
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.solver.validate().map_err(|e| invalid("solver.tolerance", e.to_string()))?;
        if self.task == Task::Convert {
            let c = self.convert.as_ref().ok_or_else(|| invalid("convert", "required by the convert task"))?;
            return match (c.mu.is_some() || c.nu.is_some(), c.sigma.is_some()) {
                (true, false) | (false, true) => Ok(()),
                _ => Err(invalid("convert", "give either mu/nu or sigma")),
            };
        }
        let resolutions = self.resolutions();
        if resolutions.is_empty() {
            return Err(invalid("resolution", "required by this task"));
        }
        if let Some(&n) = resolutions.iter().find(|&&n| n < 2) {
            return Err(invalid("resolution", format!("{n} < 2")));
        }
        let coefficients =
            self.coefficients.as_ref().ok_or_else(|| invalid("coefficients", "required by this task"))?;
        coefficients.validate().map_err(|e| invalid("coefficients", e.to_string()))?;
        let periodic = matches!(self.domain, Domain::PeriodicCell);
        match self.task {
            Task::Cell | Task::Homogenize if !periodic => {
                Err(invalid("domain", format!("the {} task needs kind = \"periodic_cell\"", self.task.name())))
            }
            Task::Solve | Task::PrimaryPair | Task::Diagnose if periodic => {
                Err(invalid("domain", format!("the {} task needs a Dirichlet domain", self.task.name())))
            }
            Task::Solve => match &self.boundary {
                None => Err(invalid("boundary", "required by the solve task")),
                Some(BoundarySpec::PolygonTrace { corners }) if corners.len() < 3 => {
                    Err(invalid("boundary.corners", "need at least 3 corners"))
                }
                _ => Ok(()),
            },
            Task::Diagnose => {
                let d = &self.diagnose;
                if !(d.exponent > 1.0) {
                    return Err(invalid("diagnose.exponent", "must exceed 1"));
                }
                if d.fractions.is_empty() {
                    return Err(invalid("diagnose.fractions", "must not be empty"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
