use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TriMesh;
use crate::mat2::Mat2;

/// Piecewise-linear field given by its vertex values.
///
/// On periodic meshes the values live on all vertices of the fundamental
/// domain; a field whose values agree on identified vertices is periodic.
#[derive(Debug, Clone)]
pub struct ScalarFieldP1 {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
}

impl ScalarFieldP1 {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "{} nodal values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        Ok(ScalarFieldP1 { mesh, values })
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: Arc<TriMesh>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        ScalarFieldP1 { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Integral over the mesh (exact for P1).
    pub fn integral(&self) -> f64 {
        self.mesh
            .triangles()
            .iter()
            .zip(self.mesh.geometry())
            .map(|(t, g)| g.area * (self.values[t[0]] + self.values[t[1]] + self.values[t[2]]) / 3.0)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &ScalarFieldP1) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `a·self + b·other` on the same mesh.
    pub fn combine(&self, a: f64, other: &ScalarFieldP1, b: f64) -> ScalarFieldP1 {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        ScalarFieldP1 { mesh: self.mesh.clone(), values }
    }
}

/// Exact gradient of the P1 interpolant on every triangle.
pub fn element_gradient(f: &ScalarFieldP1) -> Vec<[f64; 2]> {
    gradients_of(&f.mesh, &f.values)
}

pub(crate) fn gradients_of(mesh: &TriMesh, values: &[f64]) -> Vec<[f64; 2]> {
    mesh.triangles()
        .iter()
        .zip(mesh.geometry())
        .map(|(t, g)| {
            let mut d = [0.0; 2];
            for (k, &v) in t.iter().enumerate() {
                d[0] += values[v] * g.grads[k][0];
                d[1] += values[v] * g.grads[k][1];
            }
            d
        })
        .collect()
}

/// Per-triangle constant 2×2 matrices (coefficients σ, pushed-forward τ, Jacobians).
#[derive(Debug, Clone)]
pub struct ElementMatrixField {
    mesh: Arc<TriMesh>,
    values: Vec<Mat2>,
}

impl ElementMatrixField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != mesh.n_triangles() {
            return Err(Error::InvalidInput(format!(
                "{} element matrices for {} triangles",
                values.len(),
                mesh.n_triangles()
            )));
        }
        Ok(ElementMatrixField { mesh, values })
    }

    pub fn constant(mesh: Arc<TriMesh>, m: Mat2) -> Self {
        let values = vec![m; mesh.n_triangles()];
        ElementMatrixField { mesh, values }
    }

    /// Samples `f` at triangle barycenters.
    pub fn from_fn(mesh: Arc<TriMesh>, f: impl Fn([f64; 2]) -> Mat2) -> Self {
        let values = mesh.geometry().iter().map(|g| f(g.barycenter)).collect();
        ElementMatrixField { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    /// Checks every element for ellipticity, naming the first offender.
    pub fn check_elliptic(&self) -> Result<()> {
        for (element, m) in self.values.iter().enumerate() {
            crate::coeff_algebra::check_elliptic(m)
                .map_err(|e| Error::NonEllipticElement { element, reason: e.to_string() })?;
        }
        Ok(())
    }

    /// Area-weighted mean of the entries.
    pub fn mean(&self) -> Mat2 {
        let total = self.mesh.total_area();
        self.values.iter().zip(self.mesh.geometry()).fold(Mat2::ZERO, |acc, (m, g)| acc + m.scale(g.area / total))
    }
}
