use num_complex::Complex64;

use super::{ComplexMap, SigmaHarmonicMap};
use crate::coeff_algebra::{beltrami_from_matrix_checked, BeltramiPair};
use crate::elliptic_solver::flux_rotation;
use crate::error::{Error, Result};
use crate::grid::{element_gradient, ElementMatrixField, ScalarFieldP1};

/// Per-element `f_z`, `f_z̄` of `F = u + iv`.
#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerField {
    pub fz: Vec<Complex64>,
    pub fzbar: Vec<Complex64>,
}

fn from_gradients(gu: &[[f64; 2]], gv: &[[f64; 2]]) -> WirtingerField {
    let (fz, fzbar) = gu
        .iter()
        .zip(gv)
        .map(|(u, v)| (Complex64::new(u[0] + v[1], v[0] - u[1]) * 0.5, Complex64::new(u[0] - v[1], v[0] + u[1]) * 0.5))
        .unzip();
    WirtingerField { fz, fzbar }
}

/// Wirtinger derivatives of a P1 complex map.
pub fn wirtinger(f: &ComplexMap) -> WirtingerField {
    from_gradients(&element_gradient(f.re()), &element_gradient(f.im()))
}

/// Wirtinger derivatives of `u + iũ` with `∇ũ = Jσ∇u` taken elementwise.
pub fn wirtinger_exact(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> WirtingerField {
    from_gradients(&element_gradient(u), &flux_rotation(sigma, u))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairField {
    Uniform(BeltramiPair),
    PerElement(Vec<BeltramiPair>),
}

impl PairField {
    /// `(μ, ν)` of every element of `σ`.
    pub fn from_sigma(sigma: &ElementMatrixField) -> Result<Self> {
        sigma
            .values()
            .iter()
            .enumerate()
            .map(|(element, m)| {
                beltrami_from_matrix_checked(m)
                    .map_err(|e| Error::NonEllipticElement { element, reason: e.to_string() })
            })
            .collect::<Result<Vec<_>>>()
            .map(PairField::PerElement)
    }

    pub fn get(&self, element: usize) -> BeltramiPair {
        match self {
            PairField::Uniform(p) => *p,
            PairField::PerElement(v) => v[element],
        }
    }
}

/// `|f_z̄ − μ f_z − ν conj(f_z)|` per element.
pub fn beltrami_residual(w: &WirtingerField, pairs: &PairField) -> Vec<f64> {
    w.fz.iter()
        .zip(&w.fzbar)
        .enumerate()
        .map(|(t, (fz, fzbar))| {
            let p = pairs.get(t);
            (fzbar - p.mu * fz - p.nu * fz.conj()).norm()
        })
        .collect()
}

/// `μ + (conj(f_z)/f_z)·ν`: the single coefficient that `F` satisfies where
/// `f_z` is known.
pub fn reduce_nu_to_zero(pair: &BeltramiPair, fz: Complex64) -> Result<Complex64> {
    if fz.norm() == 0.0 || !fz.is_finite() {
        return Err(Error::VanishingDerivative);
    }
    Ok(pair.mu + fz.conj() / fz * pair.nu)
}

/// `|Im(Φ_z conj Ψ_z) − ¼(1 + Tr σ + det σ) det DU|` per element, with exact
/// stream gradients.
///
/// The factor `¼` comes from the `½` in each Wirtinger derivative.
pub fn equival_residual(map: &SigmaHarmonicMap) -> Vec<f64> {
    let phi = wirtinger_exact(&map.sigma, &map.u1);
    let psi = wirtinger_exact(&map.sigma, &map.u2);
    phi.fz
        .iter()
        .zip(&psi.fz)
        .zip(map.sigma.values())
        .zip(&map.det_du)
        .map(|(((a, b), s), det)| {
            let lhs = (a * b.conj()).im;
            let rhs = 0.25 * (1.0 + s.trace() + s.det()) * det;
            (lhs - rhs).abs()
        })
        .collect()
}
