//! Periodic homogenization: effective tensors from cell problems, cell maps
//! `U^A`, and image areas of the associated planar maps.
//!
//! The effective tensor is defined by average fluxes, column `j` being the
//! cell mean of `σ∇u^{e_j}`. The energies `∫_Q σ∇u^ξ·∇u^ξ` are reported next
//! to it; the two agree for symmetric σ, and for non-symmetric σ only the
//! symmetric part of the tensor is seen by the energies.

use std::sync::Arc;

use serde::Serialize;

use crate::elliptic_solver::{stream_function, PeriodicCellSolver, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{element_gradient, ElementMatrixField, ScalarFieldP1, TriMesh};
use crate::mat2::{dot, Mat2};
use crate::sigma_harmonic::{injectivity_of_vertices, jacobian_det, ComplexMap, SigmaHarmonicMap};

/// Probe directions of the energy columns: `e₁`, `e₂`, `e₁ + e₂`.
pub const PROBES: [[f64; 2]; 3] = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];

#[derive(Debug, Clone)]
pub struct EffectiveTensor {
    pub matrix: Mat2,
    /// `u^{e₁}` and `u^{e₂}`.
    pub cell_solutions: [ScalarFieldP1; 2],
    /// `∫_Q σ∇u^ξ·∇u^ξ` for each probe.
    pub quadratic_forms: [f64; 3],
    /// Relative residual of each probe solve.
    pub residuals: [f64; 3],
    pub resolution: usize,
}

impl EffectiveTensor {
    pub const CSV_HEADER: [&'static str; 11] = [
        "sigma11",
        "sigma12",
        "sigma21",
        "sigma22",
        "q_e1",
        "q_e2",
        "q_e1pe2",
        "residual_e1",
        "residual_e2",
        "residual_e1pe2",
        "resolution",
    ];

    pub fn csv_record(&self) -> [String; 11] {
        let m = self.matrix.0;
        let f = |v: f64| format!("{v:.17e}");
        [
            f(m[0][0]),
            f(m[0][1]),
            f(m[1][0]),
            f(m[1][1]),
            f(self.quadratic_forms[0]),
            f(self.quadratic_forms[1]),
            f(self.quadratic_forms[2]),
            f(self.residuals[0]),
            f(self.residuals[1]),
            f(self.residuals[2]),
            self.resolution.to_string(),
        ]
    }

    /// `σ_eff ξ·ξ` from the flux-average tensor.
    pub fn quadratic_form(&self, xi: [f64; 2]) -> f64 {
        dot(self.matrix.mul_vec(xi), xi)
    }
}

/// Cell mean of `σ∇u`.
pub fn mean_flux(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> [f64; 2] {
    let mesh = sigma.mesh();
    let total = mesh.total_area();
    element_gradient(u).iter().zip(sigma.values()).zip(mesh.geometry()).fold([0.0; 2], |acc, ((g, s), geo)| {
        let f = s.mul_vec(*g);
        [acc[0] + geo.area * f[0] / total, acc[1] + geo.area * f[1] / total]
    })
}

/// `∫ σ∇u·∇u`.
pub fn energy(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> f64 {
    element_gradient(u)
        .iter()
        .zip(sigma.values())
        .zip(sigma.mesh().geometry())
        .map(|((g, s), geo)| geo.area * dot(s.mul_vec(*g), *g))
        .sum()
}

pub fn effective_conductivity(sigma: &ElementMatrixField, opts: SolveOptions) -> Result<EffectiveTensor> {
    let solver = PeriodicCellSolver::new(sigma, opts)?;
    let mut solutions = Vec::with_capacity(3);
    let mut residuals = [0.0; 3];
    for (k, xi) in PROBES.iter().enumerate() {
        let (u, stats) = solver.solve(*xi)?;
        residuals[k] = stats.relative_residual;
        solutions.push(u);
    }
    let quadratic_forms = [0, 1, 2].map(|k| energy(sigma, &solutions[k]));
    let c1 = mean_flux(sigma, &solutions[0]);
    let c2 = mean_flux(sigma, &solutions[1]);
    let matrix = Mat2::new(c1[0], c2[0], c1[1], c2[1]);
    solutions.truncate(2);
    let u2 = solutions.pop().expect("two cell solutions");
    let u1 = solutions.pop().expect("two cell solutions");
    tracing::debug!(?matrix, "effective tensor");
    Ok(EffectiveTensor {
        matrix,
        cell_solutions: [u1, u2],
        quadratic_forms,
        residuals,
        resolution: sigma.mesh().resolution(),
    })
}

/// Arithmetic and harmonic mean matrices of `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanBounds {
    /// Mean of `sym σ`.
    pub arithmetic: Mat2,
    /// `(mean of σ⁻¹)⁻¹`, symmetrized; a lower bound only for symmetric σ.
    pub harmonic: Mat2,
}

pub fn mean_bounds(sigma: &ElementMatrixField) -> Result<MeanBounds> {
    let mesh = sigma.mesh();
    let total = mesh.total_area();
    let mut inv_mean = Mat2::ZERO;
    for (element, (m, g)) in sigma.values().iter().zip(mesh.geometry()).enumerate() {
        let inv = m.inverse().ok_or_else(|| Error::NonEllipticElement { element, reason: "singular matrix".into() })?;
        inv_mean = inv_mean + inv.scale(g.area / total);
    }
    let harmonic = inv_mean.inverse().ok_or_else(|| Error::InvalidInput("singular mean of σ⁻¹".into()))?;
    Ok(MeanBounds { arithmetic: sigma.mean().symmetric_part(), harmonic: harmonic.symmetric_part() })
}

/// Smallest eigenvalue of `sym(upper − lower)`; nonnegative iff `lower ≤ upper`.
pub fn order_margin(lower: &Mat2, upper: &Mat2) -> f64 {
    (*upper - *lower).symmetric_part().symmetric_eigenvalues().0
}

/// `U^A` on the periodic cell, with the affine part included.
#[derive(Debug, Clone)]
pub struct CellMap {
    pub a: Mat2,
    pub map: SigmaHarmonicMap,
    /// `max |U^A − A·U^I|` over vertices and components.
    pub linearity_defect: f64,
    pub nonsingular: bool,
}

/// Component `j` solves the cell problem with `ξ` = row `j` of `A`.
pub fn cell_map(sigma: &ElementMatrixField, a: Mat2, opts: SolveOptions) -> Result<CellMap> {
    let solver = PeriodicCellSolver::new(sigma, opts)?;
    let (c1, _) = solver.solve([a.get(0, 0), a.get(0, 1)])?;
    let (c2, _) = solver.solve([a.get(1, 0), a.get(1, 1)])?;
    let (i1, _) = solver.solve([1.0, 0.0])?;
    let (i2, _) = solver.solve([0.0, 1.0])?;
    let linearity_defect = c1
        .max_abs_diff(&i1.combine(a.get(0, 0), &i2, a.get(0, 1)))
        .max(c2.max_abs_diff(&i1.combine(a.get(1, 0), &i2, a.get(1, 1))));
    let nonsingular = a.det() != 0.0;
    if !nonsingular {
        tracing::warn!("singular A: homeomorphism checks do not apply");
    }
    Ok(CellMap { a, map: SigmaHarmonicMap::new(c1, c2, sigma.clone())?, linearity_defect, nonsingular })
}

/// `f^ξ = u^ξ + iũ^ξ` on the unwrapped cell, `ũ^ξ` the recovered stream function.
///
/// `det Df^ξ = σ∇u^ξ·∇u^ξ`, so the image area of the cell is the energy.
pub fn flux_map(sigma: &ElementMatrixField, xi: [f64; 2], opts: SolveOptions) -> Result<ComplexMap> {
    let (u, _) = PeriodicCellSolver::new(sigma, opts)?.solve(xi)?;
    let s = stream_function(sigma, &u)?;
    ComplexMap::new(u, s.field)
}

/// A map given by two P1 components on one mesh.
pub trait PlanarMap {
    fn components(&self) -> (&ScalarFieldP1, &ScalarFieldP1);

    fn mesh(&self) -> &Arc<TriMesh> {
        self.components().0.mesh()
    }

    fn image_points(&self) -> Vec<[f64; 2]> {
        let (a, b) = self.components();
        a.values().iter().zip(b.values()).map(|(&x, &y)| [x, y]).collect()
    }
}

impl PlanarMap for ComplexMap {
    fn components(&self) -> (&ScalarFieldP1, &ScalarFieldP1) {
        (self.re(), self.im())
    }
}

impl PlanarMap for SigmaHarmonicMap {
    fn components(&self) -> (&ScalarFieldP1, &ScalarFieldP1) {
        (&self.u1, &self.u2)
    }
}

/// Element subset; `None` means every element.
pub type Region<'a> = Option<&'a [usize]>;

fn region_elements(mesh: &TriMesh, region: Region) -> Result<Vec<usize>> {
    match region {
        None => Ok((0..mesh.n_triangles()).collect()),
        Some(r) => {
            if let Some(&t) = r.iter().find(|&&t| t >= mesh.n_triangles()) {
                return Err(Error::InvalidInput(format!("element {t} outside the mesh")));
            }
            Ok(r.to_vec())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageArea {
    /// `Σ |det D(map)|·|T|`.
    pub area: f64,
    /// `|Σ det D(map)·|T||`: overlapping folds cancel, giving the covered area.
    pub overlap_corrected: f64,
    pub injective: bool,
}

/// `|map(E)|` as `∫_E |det D(map)|`.
pub fn image_area(map: &impl PlanarMap, region: Region) -> Result<ImageArea> {
    let mesh = map.mesh();
    let elements = region_elements(mesh, region)?;
    let (u1, u2) = map.components();
    let det = jacobian_det(u1, u2);
    let geo = mesh.geometry();
    let area: f64 = elements.iter().map(|&t| det[t].abs() * geo[t].area).sum();
    let signed: f64 = elements.iter().map(|&t| det[t] * geo[t].area).sum();
    let injective = if region.is_none() {
        injectivity_of_vertices(mesh, &map.image_points()).globally_injective
    } else {
        elements.iter().all(|&t| det[t] > 0.0)
    };
    if !injective {
        tracing::warn!(area, overlap_corrected = signed.abs(), "image area of a non-injective map");
    }
    Ok(ImageArea { area, overlap_corrected: signed.abs(), injective })
}

/// Degree-5 seven-point rule on the reference triangle: `(λ₁, λ₂, λ₃, weight)`.
const DUNAVANT5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaFormula {
    /// `Σ_E φ(U(barycenter))·|det DU|·|T|`.
    pub lhs: f64,
    /// `∫_{U(E)} φ` by quadrature on the image triangles.
    pub rhs: f64,
    pub relative_gap: f64,
}

/// Compares the change-of-variables sum over `E` with direct quadrature on `U(E)`.
pub fn area_formula_check(map: &impl PlanarMap, phi: impl Fn([f64; 2]) -> f64, region: Region) -> Result<AreaFormula> {
    let mesh = map.mesh();
    let elements = region_elements(mesh, region)?;
    let image = map.image_points();
    let (u1, u2) = map.components();
    let det = jacobian_det(u1, u2);
    let geo = mesh.geometry();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for &t in &elements {
        let tri = mesh.triangles()[t];
        let p = [image[tri[0]], image[tri[1]], image[tri[2]]];
        let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        lhs += phi(centroid) * det[t].abs() * geo[t].area;
        let image_area = (det[t] * geo[t].area).abs();
        rhs += image_area
            * DUNAVANT5
                .iter()
                .map(|(l, w)| {
                    let y = [
                        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
                    ];
                    w * phi(y)
                })
                .sum::<f64>();
    }
    let relative_gap = if rhs != 0.0 { (lhs - rhs).abs() / rhs.abs() } else { (lhs - rhs).abs() };
    Ok(AreaFormula { lhs, rhs, relative_gap })
}
