//! σ-harmonic mappings `U = (u₁, u₂)`, their complex forms `Φ = u₁ + iũ₁`,
//! `Ψ = u₂ + iũ₂`, and pointwise checks on them.
//!
//! Stream-function gradients come in two conventions. The *exact* one takes
//! `∇ũ = Jσ∇u` on each element and is used for the algebraic identities
//! (Wirtinger relations, Beltrami residuals). The *recovered* one uses the P1
//! field returned by [`stream_function`] and is used whenever a single-valued
//! potential is needed (image meshes, τ, areas).

mod checks;
mod tau;
mod wirtinger;

use std::sync::Arc;

use serde::Serialize;

use crate::elliptic_solver::{stream_function, DirichletSolver, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{element_gradient, polygon, ElementMatrixField, ScalarFieldP1, TriMesh};
use crate::mat2::Mat2;

pub use checks::{injectivity_check, injectivity_of_vertices, unimodality_check, InjectivityReport, Unimodality};
pub use tau::{
    factorized_jacobian, pushforward_tau, pushforward_tau_exact, FactorizedJacobian, TauField, DEGENERATE_IMAGE_TOL,
};
pub use wirtinger::{
    beltrami_residual, equival_residual, reduce_nu_to_zero, wirtinger, wirtinger_exact, PairField, WirtingerField,
};

/// `re + i·im` on one mesh.
#[derive(Debug, Clone)]
pub struct ComplexMap {
    re: ScalarFieldP1,
    im: ScalarFieldP1,
}

impl ComplexMap {
    pub fn new(re: ScalarFieldP1, im: ScalarFieldP1) -> Result<Self> {
        if !Arc::ptr_eq(re.mesh(), im.mesh()) {
            return Err(Error::InvalidInput("real and imaginary parts live on different meshes".into()));
        }
        Ok(ComplexMap { re, im })
    }

    pub fn re(&self) -> &ScalarFieldP1 {
        &self.re
    }

    pub fn im(&self) -> &ScalarFieldP1 {
        &self.im
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        self.re.mesh()
    }

    /// Vertex images `(re, im)`.
    pub fn image_points(&self) -> Vec<[f64; 2]> {
        self.re.values().iter().zip(self.im.values()).map(|(&x, &y)| [x, y]).collect()
    }
}

/// Per-element Jacobian determinant of `(u₁, u₂)`.
pub fn jacobian_det(u1: &ScalarFieldP1, u2: &ScalarFieldP1) -> Vec<f64> {
    element_gradient(u1).into_iter().zip(element_gradient(u2)).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).collect()
}

#[derive(Debug, Clone)]
pub struct SigmaHarmonicMap {
    pub u1: ScalarFieldP1,
    pub u2: ScalarFieldP1,
    pub sigma: ElementMatrixField,
    pub det_du: Vec<f64>,
}

impl SigmaHarmonicMap {
    pub fn new(u1: ScalarFieldP1, u2: ScalarFieldP1, sigma: ElementMatrixField) -> Result<Self> {
        if !Arc::ptr_eq(u1.mesh(), u2.mesh()) || !Arc::ptr_eq(u1.mesh(), sigma.mesh()) {
            return Err(Error::InvalidInput("map components and σ live on different meshes".into()));
        }
        let det_du = jacobian_det(&u1, &u2);
        Ok(SigmaHarmonicMap { u1, u2, sigma, det_du })
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        self.u1.mesh()
    }

    pub fn min_det(&self) -> f64 {
        self.det_du.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Per-element `DU` with rows `∇u₁`, `∇u₂`.
    pub fn jacobians(&self) -> Vec<Mat2> {
        element_gradient(&self.u1)
            .into_iter()
            .zip(element_gradient(&self.u2))
            .map(|(a, b)| Mat2::from_rows(a, b))
            .collect()
    }

    pub fn image_points(&self) -> Vec<[f64; 2]> {
        self.u1.values().iter().zip(self.u2.values()).map(|(&x, &y)| [x, y]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PrimaryPair {
    pub phi: ComplexMap,
    pub psi: ComplexMap,
    pub map: SigmaHarmonicMap,
    /// `‖∇ũ − Jσ∇u‖_{L²}` of the two stream-function recoveries.
    pub stream_residuals: [f64; 2],
}

/// Solves for `u₁ = x₁`, `u₂ = x₂` on the boundary and recovers both stream
/// functions (anchored to vanish at vertex 0).
pub fn primary_pair(sigma: &ElementMatrixField, opts: SolveOptions) -> Result<PrimaryPair> {
    let mesh = sigma.mesh();
    if mesh.is_periodic() {
        return Err(Error::InvalidMesh("primary pair needs a Dirichlet domain, got a periodic cell".into()));
    }
    if !mesh.is_convex() {
        return Err(Error::Domain("primary pair requires a convex domain".into()));
    }
    let solver = DirichletSolver::new(sigma, opts)?;
    let (u1, _) = solver.solve(|p| p[0])?;
    let (u2, _) = solver.solve(|p| p[1])?;
    let s1 = stream_function(sigma, &u1)?;
    let s2 = stream_function(sigma, &u2)?;
    let map = SigmaHarmonicMap::new(u1.clone(), u2.clone(), sigma.clone())?;
    tracing::debug!(min_det = map.min_det(), "primary pair");
    Ok(PrimaryPair {
        phi: ComplexMap::new(u1, s1.field)?,
        psi: ComplexMap::new(u2, s2.field)?,
        map,
        stream_residuals: [s1.residual_l2, s2.residual_l2],
    })
}

#[derive(Debug, Clone)]
pub struct BoundaryValueMap {
    pub map: SigmaHarmonicMap,
    /// Whether the data embed the boundary loop onto a convex polygon,
    /// counterclockwise.
    pub convex_embedding: bool,
}

/// Whether `targets` (one point per boundary-loop vertex) is a sense-preserving
/// embedding of the loop onto a convex polygon.
pub fn is_convex_embedding(targets: &[[f64; 2]]) -> bool {
    polygon::is_simple(targets) && polygon::signed_area(targets) > 0.0 && polygon::is_convex(targets)
}

/// σ-harmonic map with `U = targets[k]` at the `k`-th boundary-loop vertex.
///
/// Data that are not a convex embedding are accepted with a warning.
pub fn sigma_harmonic_map(
    sigma: &ElementMatrixField,
    targets: &[[f64; 2]],
    opts: SolveOptions,
) -> Result<BoundaryValueMap> {
    let mesh = sigma.mesh();
    let boundary = mesh.boundary_loop();
    if targets.len() != boundary.len() {
        return Err(Error::InvalidInput(format!(
            "{} boundary targets for {} boundary vertices",
            targets.len(),
            boundary.len()
        )));
    }
    let convex_embedding = is_convex_embedding(targets);
    if !convex_embedding {
        tracing::warn!("boundary data are not a convex sense-preserving embedding");
    }
    let solver = DirichletSolver::new(sigma, opts)?;
    let mut g1 = vec![0.0; mesh.n_vertices()];
    let mut g2 = vec![0.0; mesh.n_vertices()];
    for (&v, t) in boundary.iter().zip(targets) {
        g1[v] = t[0];
        g2[v] = t[1];
    }
    let (u1, _) = solver.solve_values(&g1)?;
    let (u2, _) = solver.solve_values(&g2)?;
    Ok(BoundaryValueMap { map: SigmaHarmonicMap::new(u1, u2, sigma.clone())?, convex_embedding })
}

/// Summary record of a primary-pair run.
#[derive(Debug, Clone, Serialize)]
pub struct PrimaryPairSummary {
    pub min_det_du: f64,
    pub max_det_du: f64,
    pub locally_injective: bool,
    pub globally_injective: bool,
    pub max_equival_residual: f64,
    pub max_beltrami_residual: f64,
    pub stream_residuals: [f64; 2],
}

impl PrimaryPair {
    pub fn summary(&self) -> Result<PrimaryPairSummary> {
        let inj = injectivity_check(&self.map);
        let equival = equival_residual(&self.map);
        let pairs = PairField::from_sigma(&self.map.sigma)?;
        let belt = beltrami_residual(&wirtinger_exact(&self.map.sigma, &self.map.u1), &pairs);
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        Ok(PrimaryPairSummary {
            min_det_du: self.map.min_det(),
            max_det_du: self.map.det_du.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            locally_injective: inj.locally_injective,
            globally_injective: inj.globally_injective,
            max_equival_residual: max(&equival),
            max_beltrami_residual: max(&belt),
            stream_residuals: self.stream_residuals,
        })
    }
}
