//! Weak-form P1 assembly and solution of `div(σ∇u) = 0` for non-symmetric σ.
//!
//! The bilinear form is `a(u, φ) = ∫ ∇φ · σ∇u`, test gradient on the left.
//! With non-symmetric σ the stiffness matrix is non-symmetric (its pattern is
//! symmetric), so both backends are valid for general matrices: sparse LU by
//! default, or BiCGSTAB with ILU(0).

mod sparse;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{element_gradient, ElementGeometry, ElementMatrixField, ScalarFieldP1, TriMesh};
use crate::mat2::{dot, rotate, Mat2};

pub use sparse::CsrMatrix;
use sparse::{bicgstab, relative_residual, Ilu0, LuFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    #[default]
    DirectLu,
    IterativeNonsymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Relative residual `‖Ax − b‖ / ‖b‖` required of every solve.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { method: SolveMethod::DirectLu, tolerance: 1e-10, max_iterations: 5000 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!("solver tolerance {} must be positive", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub unknowns: usize,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Assembled system with its vertex → equation map (`None` for eliminated vertices).
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: Vec<Option<usize>>,
}

enum Backend {
    Lu(Box<LuFactor>),
    Krylov(Ilu0),
}

/// A factorized (or preconditioned) matrix, reusable across right-hand sides.
struct Factorization {
    matrix: CsrMatrix,
    backend: Backend,
    opts: SolveOptions,
}

impl Factorization {
    fn new(matrix: CsrMatrix, opts: SolveOptions) -> Result<Self> {
        opts.validate()?;
        let backend = match opts.method {
            SolveMethod::DirectLu => Backend::Lu(Box::new(LuFactor::new(&matrix)?)),
            SolveMethod::IterativeNonsymmetric => Backend::Krylov(Ilu0::new(&matrix)?),
        };
        Ok(Factorization { matrix, backend, opts })
    }

    fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let (x, iterations, residual) = match &self.backend {
            Backend::Lu(lu) => {
                let mut x = lu.solve(b);
                let mut res = relative_residual(&self.matrix, &x, b);
                let mut steps = 0;
                while res > self.opts.tolerance && steps < 2 {
                    let ax = self.matrix.mul_vec(&x);
                    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
                    let dx = lu.solve(&r);
                    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
                    res = relative_residual(&self.matrix, &x, b);
                    steps += 1;
                }
                if !(res <= self.opts.tolerance) {
                    return Err(Error::SolverBreakdown { iterations: steps, residual: res });
                }
                (x, steps, res)
            }
            Backend::Krylov(pre) => bicgstab(&self.matrix, pre, b, self.opts.tolerance, self.opts.max_iterations)?,
        };
        let stats = SolveStats { method: self.opts.method, unknowns: b.len(), iterations, relative_residual: residual };
        tracing::debug!(
            method = ?stats.method,
            unknowns = stats.unknowns,
            iterations = stats.iterations,
            residual = stats.relative_residual,
            "linear solve"
        );
        Ok((x, stats))
    }
}

/// `K_e[a][b] = |T| ∇φ_a · σ∇φ_b`.
pub fn element_stiffness(g: &ElementGeometry, sigma: &Mat2) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for b in 0..3 {
        let flux = sigma.mul_vec(g.grads[b]);
        for a in 0..3 {
            k[a][b] = g.area * dot(g.grads[a], flux);
        }
    }
    k
}

fn check_coefficients(sigma: &ElementMatrixField) -> Result<()> {
    sigma.check_elliptic()?;
    for (element, m) in sigma.values().iter().enumerate() {
        let q = 1.0 + m.trace() + m.det();
        if !(q > 0.0) {
            return Err(Error::NonEllipticElement { element, reason: format!("1 + Tr σ + det σ = {q:e}") });
        }
    }
    Ok(())
}

fn assemble_matrix(mesh: &TriMesh, sigma: &[Mat2], dof_map: &[Option<usize>], n: usize) -> CsrMatrix {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in mesh.triangles() {
        for &va in t {
            if let Some(i) = dof_map[va] {
                rows[i].extend(t.iter().filter_map(|&vb| dof_map[vb]));
            }
        }
    }
    let mut a = CsrMatrix::from_pattern(rows);
    for ((t, g), s) in mesh.triangles().iter().zip(mesh.geometry()).zip(sigma) {
        let ke = element_stiffness(g, s);
        for (la, &va) in t.iter().enumerate() {
            let Some(i) = dof_map[va] else { continue };
            for (lb, &vb) in t.iter().enumerate() {
                if let Some(j) = dof_map[vb] {
                    a.add(i, j, ke[la][lb]);
                }
            }
        }
    }
    a
}

/// Builds the Dirichlet system for boundary values `g` (read at boundary vertices only).
pub fn assemble_dirichlet(sigma: &ElementMatrixField, g: &[f64]) -> Result<LinearSystem> {
    let solver_parts = DirichletParts::new(sigma)?;
    let rhs = solver_parts.rhs(g);
    let matrix = assemble_matrix(sigma.mesh(), sigma.values(), &solver_parts.dof_map, solver_parts.n);
    Ok(LinearSystem { matrix, rhs, dof_map: solver_parts.dof_map })
}

struct DirichletParts {
    dof_map: Vec<Option<usize>>,
    n: usize,
    /// `(equation, boundary vertex, K_ab)` in element order.
    coupling: Vec<(usize, usize, f64)>,
}

impl DirichletParts {
    fn new(sigma: &ElementMatrixField) -> Result<Self> {
        let mesh = sigma.mesh();
        if mesh.is_periodic() {
            return Err(Error::InvalidMesh("Dirichlet problem requested on a periodic mesh".into()));
        }
        check_coefficients(sigma)?;
        let boundary = mesh.boundary_mask();
        let mut n = 0;
        let dof_map: Vec<Option<usize>> = boundary
            .iter()
            .map(|&b| {
                (!b).then(|| {
                    n += 1;
                    n - 1
                })
            })
            .collect();
        let mut coupling = Vec::new();
        for ((t, g), s) in mesh.triangles().iter().zip(mesh.geometry()).zip(sigma.values()) {
            let ke = element_stiffness(g, s);
            for (la, &va) in t.iter().enumerate() {
                let Some(i) = dof_map[va] else { continue };
                for (lb, &vb) in t.iter().enumerate() {
                    if dof_map[vb].is_none() {
                        coupling.push((i, vb, ke[la][lb]));
                    }
                }
            }
        }
        Ok(DirichletParts { dof_map, n, coupling })
    }

    fn rhs(&self, g: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.n];
        for &(i, vb, k) in &self.coupling {
            rhs[i] -= k * g[vb];
        }
        rhs
    }
}

/// Dirichlet problem with a factorization shared across boundary data.
pub struct DirichletSolver {
    sigma: ElementMatrixField,
    parts: DirichletParts,
    factor: Factorization,
}

impl DirichletSolver {
    pub fn new(sigma: &ElementMatrixField, opts: SolveOptions) -> Result<Self> {
        let parts = DirichletParts::new(sigma)?;
        let matrix = assemble_matrix(sigma.mesh(), sigma.values(), &parts.dof_map, parts.n);
        let factor = Factorization::new(matrix, opts)?;
        Ok(DirichletSolver { sigma: sigma.clone(), parts, factor })
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        self.sigma.mesh()
    }

    /// `g` holds one value per vertex; only boundary entries are read.
    pub fn solve_values(&self, g: &[f64]) -> Result<(ScalarFieldP1, SolveStats)> {
        let mesh = self.sigma.mesh();
        if g.len() != mesh.n_vertices() {
            return Err(Error::InvalidInput("boundary data length differs from vertex count".into()));
        }
        if let Some(&v) = mesh.boundary_loop().iter().find(|&&v| !g[v].is_finite()) {
            return Err(Error::InvalidInput(format!("boundary value at vertex {v} is not finite")));
        }
        let rhs = self.parts.rhs(g);
        let (x, stats) = self.factor.solve(&rhs)?;
        let values = self.parts.dof_map.iter().enumerate().map(|(v, d)| d.map_or(g[v], |i| x[i])).collect();
        Ok((ScalarFieldP1::new(mesh.clone(), values)?, stats))
    }

    pub fn solve(&self, g: impl Fn([f64; 2]) -> f64) -> Result<(ScalarFieldP1, SolveStats)> {
        let mesh = self.sigma.mesh();
        let mask = mesh.boundary_mask();
        let values: Vec<f64> = mesh.vertices().iter().zip(&mask).map(|(&p, &b)| if b { g(p) } else { 0.0 }).collect();
        self.solve_values(&values)
    }
}

/// Discrete weak solution of `div(σ∇u) = 0`, `u = g` on the boundary.
pub fn solve_dirichlet(
    sigma: &ElementMatrixField,
    g: impl Fn([f64; 2]) -> f64,
    opts: SolveOptions,
) -> Result<ScalarFieldP1> {
    Ok(DirichletSolver::new(sigma, opts)?.solve(g)?.0)
}

/// Cell problems `div(σ(ξ + ∇w)) = 0` on the torus, factorized once.
///
/// The free vertex of class 0 is pinned; the equations sum to zero on the
/// torus, so the pinned row is implied by the others.
pub struct PeriodicCellSolver {
    sigma: ElementMatrixField,
    dof_map: Vec<Option<usize>>,
    factor: Factorization,
}

impl PeriodicCellSolver {
    pub fn new(sigma: &ElementMatrixField, opts: SolveOptions) -> Result<Self> {
        let mesh = sigma.mesh();
        if !mesh.is_periodic() {
            return Err(Error::InvalidMesh("cell problem requires a periodic mesh".into()));
        }
        check_coefficients(sigma)?;
        let dof_map: Vec<Option<usize>> = mesh.periodic_index().iter().map(|&p| p.checked_sub(1)).collect();
        let n = mesh.n_free_vertices() - 1;
        let matrix = assemble_matrix(mesh, sigma.values(), &dof_map, n);
        let factor = Factorization::new(matrix, opts)?;
        Ok(PeriodicCellSolver { sigma: sigma.clone(), dof_map, factor })
    }

    /// `u` with `u − ξ·x` periodic and `∫_Q u = 0`, on the unwrapped vertices.
    pub fn solve(&self, xi: [f64; 2]) -> Result<(ScalarFieldP1, SolveStats)> {
        let mesh = self.sigma.mesh();
        let mut rhs = vec![0.0; self.factor.matrix.dim()];
        for ((t, g), s) in mesh.triangles().iter().zip(mesh.geometry()).zip(self.sigma.values()) {
            let flux = s.mul_vec(xi);
            for (la, &va) in t.iter().enumerate() {
                if let Some(i) = self.dof_map[va] {
                    rhs[i] -= g.area * dot(g.grads[la], flux);
                }
            }
        }
        let (x, stats) = self.factor.solve(&rhs)?;
        let values: Vec<f64> =
            mesh.vertices().iter().zip(&self.dof_map).map(|(p, d)| dot(xi, *p) + d.map_or(0.0, |i| x[i])).collect();
        let mut u = ScalarFieldP1::new(mesh.clone(), values)?;
        let mean = u.integral() / mesh.total_area();
        u = ScalarFieldP1::new(mesh.clone(), u.values().iter().map(|v| v - mean).collect())?;
        Ok((u, stats))
    }
}

pub fn solve_periodic_cell(sigma: &ElementMatrixField, xi: [f64; 2], opts: SolveOptions) -> Result<ScalarFieldP1> {
    Ok(PeriodicCellSolver::new(sigma, opts)?.solve(xi)?.0)
}

/// Per-element `Jσ∇u`, the exact gradient a stream function must have.
pub fn flux_rotation(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> Vec<[f64; 2]> {
    element_gradient(u).into_iter().zip(sigma.values()).map(|(g, s)| rotate(s.mul_vec(g))).collect()
}

/// Least-squares stream function with its misfit `‖∇ũ − Jσ∇u‖_{L²}`.
#[derive(Debug, Clone)]
pub struct StreamFunction {
    pub field: ScalarFieldP1,
    pub residual_l2: f64,
    pub stats: SolveStats,
}

/// Solves `∫ ∇φ·∇ũ = ∫ ∇φ·(Jσ∇u)` for all P1 `φ`, with `ũ = 0` at vertex 0.
///
/// Periodic meshes are treated as their unwrapped fundamental domain, so the
/// result carries the non-periodic linear part of the stream function.
pub fn stream_function(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> Result<StreamFunction> {
    let mesh = sigma.mesh();
    if !Arc::ptr_eq(mesh, u.mesh()) && mesh.n_vertices() != u.mesh().n_vertices() {
        return Err(Error::InvalidInput("σ and u live on different meshes".into()));
    }
    if !crate::grid::polygon::is_simple(&mesh.boundary_points()) {
        return Err(Error::InvalidMesh("stream function needs a simply connected domain".into()));
    }
    let q = flux_rotation(sigma, u);
    let dof_map: Vec<Option<usize>> = (0..mesh.n_vertices()).map(|v| v.checked_sub(1)).collect();
    let n = mesh.n_vertices() - 1;
    let identity = vec![Mat2::IDENTITY; mesh.n_triangles()];
    let matrix = assemble_matrix(mesh, &identity, &dof_map, n);
    let mut rhs = vec![0.0; n];
    for ((t, g), qt) in mesh.triangles().iter().zip(mesh.geometry()).zip(&q) {
        for (la, &va) in t.iter().enumerate() {
            if let Some(i) = dof_map[va] {
                rhs[i] += g.area * dot(g.grads[la], *qt);
            }
        }
    }
    let factor = Factorization::new(matrix, SolveOptions::default())?;
    let (x, stats) = factor.solve(&rhs)?;
    let values: Vec<f64> = dof_map.iter().map(|d| d.map_or(0.0, |i| x[i])).collect();
    let field = ScalarFieldP1::new(mesh.clone(), values)?;
    let residual_l2 = element_gradient(&field)
        .iter()
        .zip(&q)
        .zip(mesh.geometry())
        .map(|((a, b), g)| g.area * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)))
        .sum::<f64>()
        .sqrt();
    Ok(StreamFunction { field, residual_l2, stats })
}

/// `Σ_T ∫_T ∇φ_i · σ∇u` for every free vertex `i` (periodic classes summed).
pub fn vertex_residual(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> Vec<f64> {
    let mesh = sigma.mesh();
    let grads = element_gradient(u);
    let mut r = vec![0.0; mesh.n_free_vertices()];
    for (((t, g), s), gu) in mesh.triangles().iter().zip(mesh.geometry()).zip(sigma.values()).zip(&grads) {
        let flux = s.mul_vec(*gu);
        for (la, &va) in t.iter().enumerate() {
            r[mesh.periodic_index()[va]] += g.area * dot(g.grads[la], flux);
        }
    }
    r
}

/// Circulation of the element field `Jσ∇u` along the link of every vertex.
///
/// On each triangle `(i, a, b)` (counterclockwise) the link edge runs from `a`
/// to `b`; for interior vertices the link is closed and the circulation equals
/// `−2` times the vertex residual.
pub fn vertex_circulation(sigma: &ElementMatrixField, u: &ScalarFieldP1) -> Vec<f64> {
    let mesh = sigma.mesh();
    let q = flux_rotation(sigma, u);
    let pos = mesh.vertices();
    let mut c = vec![0.0; mesh.n_free_vertices()];
    for (t, qt) in mesh.triangles().iter().zip(&q) {
        for k in 0..3 {
            let (i, a, b) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let edge = [pos[b][0] - pos[a][0], pos[b][1] - pos[a][1]];
            c[mesh.periodic_index()[i]] += dot(*qt, edge);
        }
    }
    c
}

#[cfg(test)]
mod tests;
