use std::sync::Arc;

use super::checks::injectivity_of_vertices;
use super::{ComplexMap, SigmaHarmonicMap};
use crate::elliptic_solver::flux_rotation;
use crate::error::{Error, Result};
use crate::grid::{element_gradient, ElementMatrixField, ScalarFieldP1, TriMesh};
use crate::mat2::Mat2;

/// Elements with `|det Df| < DEGENERATE_IMAGE_TOL · |Df|²` are excluded.
pub const DEGENERATE_IMAGE_TOL: f64 = 1e-12;

/// `Df σ Dfᵀ / det Df`, or `None` on a near-degenerate element.
fn transported(df: &Mat2, sigma: &Mat2) -> Option<Mat2> {
    let det = df.det();
    let scale: f64 = df.0.iter().flatten().map(|v| v * v).sum();
    if !(det.abs() >= DEGENERATE_IMAGE_TOL * scale) || scale == 0.0 {
        return None;
    }
    Some((*df * *sigma * df.transpose()).scale(1.0 / det))
}

fn differentials(re: &[[f64; 2]], im: &[[f64; 2]]) -> Vec<Mat2> {
    re.iter().zip(im).map(|(a, b)| Mat2::from_rows(*a, *b)).collect()
}

fn check_same_mesh(a: &Arc<TriMesh>, b: &Arc<TriMesh>) -> Result<()> {
    if Arc::ptr_eq(a, b) {
        Ok(())
    } else {
        Err(Error::InvalidInput("σ and the map live on different meshes".into()))
    }
}

/// `τ = Df σ Dfᵀ / det Df` on the image triangulation of `f`.
#[derive(Debug, Clone)]
pub struct TauField {
    /// τ per element; degenerate elements carry `NaN` entries.
    pub tau: ElementMatrixField,
    pub degenerate: Vec<bool>,
    /// `det τ` per element.
    pub c: Vec<f64>,
    /// `τ₁₂` per element.
    pub b: Vec<f64>,
    /// `∫ |τ₁₁ − 1|` over the image.
    pub tau11_residual_l1: f64,
    /// `∫ |τ₂₁|` over the image.
    pub tau21_residual_l1: f64,
    /// `max |det τ − det σ|`.
    pub det_defect: f64,
    /// `max |(τ₁₂ − τ₂₁) − (σ₁₂ − σ₂₁)|`.
    pub skew_defect: f64,
}

impl TauField {
    pub fn image_mesh(&self) -> &Arc<TriMesh> {
        self.tau.mesh()
    }
}

/// Pushes `σ` forward along a globally injective P1 map `f`.
pub fn pushforward_tau(sigma: &ElementMatrixField, f: &ComplexMap) -> Result<TauField> {
    check_same_mesh(sigma.mesh(), f.mesh())?;
    let mesh = sigma.mesh();
    let image = f.image_points();
    let report = injectivity_of_vertices(mesh, &image);
    if !report.globally_injective {
        return Err(Error::NotInjective(format!(
            "min det {:e}, boundary simple {}, area gap {:e}",
            report.min_det, report.boundary_simple, report.area_gap
        )));
    }
    let image_mesh = Arc::new(mesh.with_positions(image));
    let dfs = differentials(&element_gradient(f.re()), &element_gradient(f.im()));
    let nan = Mat2::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    let mut taus = Vec::with_capacity(dfs.len());
    let mut degenerate = Vec::with_capacity(dfs.len());
    let (mut r11, mut r21, mut det_defect, mut skew_defect) = (0.0, 0.0, 0.0f64, 0.0f64);
    for ((df, s), g) in dfs.iter().zip(sigma.values()).zip(image_mesh.geometry()) {
        match transported(df, s) {
            Some(t) => {
                r11 += (t.get(0, 0) - 1.0).abs() * g.area.abs();
                r21 += t.get(1, 0).abs() * g.area.abs();
                det_defect = det_defect.max((t.det() - s.det()).abs());
                skew_defect = skew_defect.max((t.skew() - s.skew()).abs());
                taus.push(t);
                degenerate.push(false);
            }
            None => {
                taus.push(nan);
                degenerate.push(true);
            }
        }
    }
    let flagged = degenerate.iter().filter(|&&d| d).count();
    if flagged > 0 {
        tracing::warn!(flagged, "degenerate image elements excluded from τ norms");
    }
    let c = taus.iter().map(Mat2::det).collect();
    let b = taus.iter().map(|t| t.get(0, 1)).collect();
    Ok(TauField {
        tau: ElementMatrixField::new(image_mesh, taus)?,
        degenerate,
        c,
        b,
        tau11_residual_l1: r11,
        tau21_residual_l1: r21,
        det_defect,
        skew_defect,
    })
}

/// τ per element for `f = u + iũ` with the exact rotation `∇ũ = Jσ∇u`.
///
/// Here `τ₁₁ = 1` and `τ₂₁ = 0` hold identically, element by element.
pub fn pushforward_tau_exact(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> Vec<Option<Mat2>> {
    let dfs = differentials(&element_gradient(u), &flux_rotation(sigma, u));
    dfs.iter().zip(sigma.values()).map(|(df, s)| transported(df, s)).collect()
}

/// `det DV` of `V = U ∘ f⁻¹`, carried by the image triangulation of `f`.
#[derive(Debug, Clone)]
pub struct FactorizedJacobian {
    pub image_mesh: Arc<TriMesh>,
    pub det_dv: Vec<f64>,
}

/// `det DV = det DU / det Df` on each image element of a globally injective `f`.
pub fn factorized_jacobian(map: &SigmaHarmonicMap, f: &ComplexMap) -> Result<FactorizedJacobian> {
    check_same_mesh(map.mesh(), f.mesh())?;
    let image = f.image_points();
    let report = injectivity_of_vertices(map.mesh(), &image);
    if !report.globally_injective {
        return Err(Error::NotInjective(format!("factor map has min det {:e}", report.min_det)));
    }
    let det_f = super::jacobian_det(f.re(), f.im());
    let det_dv = map.det_du.iter().zip(&det_f).map(|(u, d)| u / d).collect();
    Ok(FactorizedJacobian { image_mesh: Arc::new(map.mesh().with_positions(image)), det_dv })
}
