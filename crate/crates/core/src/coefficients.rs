//! Coefficient families sampled onto meshes.
//!
//! Every family is defined on the unit square and extended periodically, so
//! the same description serves Dirichlet and cell problems. Interfaces of the
//! laminate, checkerboard and random families sit on mesh lines whenever the
//! resolution is a multiple of the cell count.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeff_algebra::{sigma_from_beltrami, BeltramiPair};
use crate::error::{Error, Result};
use crate::grid::{ElementMatrixField, TriMesh};
use crate::mat2::Mat2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Phases vary along `x₁` (vertical strips).
    #[default]
    X1,
    X2,
}

fn half() -> f64 {
    0.5
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CoefficientSpec {
    Constant {
        matrix: Mat2,
    },
    /// Isotropic phase `a` on `{coordinate mod 1 < fraction}`, `b` elsewhere.
    Laminate {
        a: f64,
        b: f64,
        #[serde(default)]
        direction: Axis,
        #[serde(default = "half")]
        fraction: f64,
    },
    /// Isotropic `a` on cells with even `i + j`, `b` on the others.
    Checkerboard {
        a: f64,
        b: f64,
        #[serde(default = "two")]
        cells: usize,
    },
    /// One random matrix per cell of a `cells × cells` grid, with Beltrami
    /// distortion at most `k_max`.
    RandomPiecewise {
        k_max: f64,
        cells: usize,
        seed: u64,
        #[serde(default)]
        symmetric: bool,
    },
    /// Constant `[[a, b], [−b, a]]`.
    Hall {
        a: f64,
        b: f64,
    },
    /// Row-major `cells × cells` table, cell `(i, j)` covering `[i/n, (i+1)/n) × [j/n, (j+1)/n)`.
    Table {
        cells: usize,
        values: Vec<Mat2>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {v} must be positive and finite")))
    }
}

fn cell_index(p: [f64; 2], n: usize) -> (usize, usize) {
    let idx = |t: f64| ((t.rem_euclid(1.0) * n as f64).floor() as usize).min(n - 1);
    (idx(p[0]), idx(p[1]))
}

/// Draws `σ` with `|μ| + |ν| ≤ (K−1)/(K+1)`; `ν` is real when `symmetric`.
pub fn random_conductivity(rng: &mut ChaCha8Rng, k_max: f64, symmetric: bool) -> Mat2 {
    let bound = (k_max - 1.0) / (k_max + 1.0);
    let s = bound * rng.gen::<f64>();
    let split = rng.gen::<f64>();
    let mu = Complex64::from_polar(split * s, TAU * rng.gen::<f64>());
    let nu = if symmetric {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        Complex64::new(sign * (1.0 - split) * s, 0.0)
    } else {
        Complex64::from_polar((1.0 - split) * s, TAU * rng.gen::<f64>())
    };
    // |μ| + |ν| ≤ bound < 1, so the conversion cannot fail
    sigma_from_beltrami(&BeltramiPair { mu, nu }).map(|c| c.entries()).unwrap_or(Mat2::IDENTITY)
}

impl CoefficientSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientSpec::Constant { matrix } => crate::coeff_algebra::check_elliptic(matrix),
            CoefficientSpec::Laminate { a, b, fraction, .. } => {
                positive("a", *a)?;
                positive("b", *b)?;
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(Error::InvalidInput(format!("fraction = {fraction} outside (0, 1)")));
                }
                Ok(())
            }
            CoefficientSpec::Checkerboard { a, b, cells } => {
                positive("a", *a)?;
                positive("b", *b)?;
                if *cells == 0 {
                    return Err(Error::InvalidInput("cells must be at least 1".into()));
                }
                Ok(())
            }
            CoefficientSpec::RandomPiecewise { k_max, cells, .. } => {
                if !(*k_max >= 1.0 && k_max.is_finite()) {
                    return Err(Error::InvalidInput(format!("k_max = {k_max} must be finite and ≥ 1")));
                }
                if *cells == 0 {
                    return Err(Error::InvalidInput("cells must be at least 1".into()));
                }
                Ok(())
            }
            CoefficientSpec::Hall { a, b } => {
                positive("a", *a)?;
                if !b.is_finite() {
                    return Err(Error::InvalidInput(format!("b = {b} is not finite")));
                }
                Ok(())
            }
            CoefficientSpec::Table { cells, values } => {
                if *cells == 0 || values.len() != cells * cells {
                    return Err(Error::InvalidInput(format!(
                        "table has {} entries, expected {}",
                        values.len(),
                        cells * cells
                    )));
                }
                for (i, m) in values.iter().enumerate() {
                    crate::coeff_algebra::check_elliptic(m)
                        .map_err(|e| Error::InvalidInput(format!("table entry {i}: {e}")))?;
                }
                Ok(())
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            CoefficientSpec::Constant { matrix } => matrix.skew() == 0.0,
            CoefficientSpec::Laminate { .. } | CoefficientSpec::Checkerboard { .. } => true,
            CoefficientSpec::RandomPiecewise { symmetric, .. } => *symmetric,
            CoefficientSpec::Hall { b, .. } => *b == 0.0,
            CoefficientSpec::Table { values, .. } => values.iter().all(|m| m.skew() == 0.0),
        }
    }

    /// Per-cell matrices of the random family, row-major in `(j, i)`.
    fn random_table(k_max: f64, cells: usize, seed: u64, symmetric: bool) -> Vec<Mat2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..cells * cells).map(|_| random_conductivity(&mut rng, k_max, symmetric)).collect()
    }

    /// Evaluates the family at each triangle barycenter.
    pub fn sample(&self, mesh: Arc<TriMesh>) -> Result<ElementMatrixField> {
        self.validate()?;
        let field = match self {
            CoefficientSpec::Constant { matrix } => ElementMatrixField::constant(mesh, *matrix),
            CoefficientSpec::Laminate { a, b, direction, fraction } => ElementMatrixField::from_fn(mesh, |p| {
                let t = match direction {
                    Axis::X1 => p[0],
                    Axis::X2 => p[1],
                };
                let s = if t.rem_euclid(1.0) < *fraction { *a } else { *b };
                Mat2::diag(s, s)
            }),
            CoefficientSpec::Checkerboard { a, b, cells } => ElementMatrixField::from_fn(mesh, |p| {
                let (i, j) = cell_index(p, *cells);
                let s = if (i + j) % 2 == 0 { *a } else { *b };
                Mat2::diag(s, s)
            }),
            CoefficientSpec::RandomPiecewise { k_max, cells, seed, symmetric } => {
                let table = Self::random_table(*k_max, *cells, *seed, *symmetric);
                ElementMatrixField::from_fn(mesh, |p| {
                    let (i, j) = cell_index(p, *cells);
                    table[j * cells + i]
                })
            }
            CoefficientSpec::Hall { a, b } => ElementMatrixField::constant(mesh, Mat2::new(*a, *b, -*b, *a)),
            CoefficientSpec::Table { cells, values } => ElementMatrixField::from_fn(mesh, |p| {
                let (i, j) = cell_index(p, *cells);
                values[j * cells + i]
            }),
        };
        field.check_elliptic()?;
        Ok(field)
    }
}
