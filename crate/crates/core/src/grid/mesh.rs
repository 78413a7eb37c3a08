use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::polygon;

pub const DEFAULT_TRIANGLE_BUDGET: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    UnitSquare,
    RegularNgon {
        n_sides: usize,
        radius: f64,
    },
    /// `Q = (0,1)²` with opposite edges identified.
    PeriodicCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Periodicity {
    None,
    UnitSquareIdentification,
}

/// Affine-element data: signed area, basis gradients, barycenter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
    pub barycenter: [f64; 2],
}

impl ElementGeometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = p;
        let twice = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        // ∇φ_i = J(p_k − p_j) / (2A) for the edge (j, k) opposite to i
        let g = |pj: [f64; 2], pk: [f64; 2]| [-(pk[1] - pj[1]) / twice, (pk[0] - pj[0]) / twice];
        ElementGeometry {
            area: 0.5 * twice,
            grads: [g(b, c), g(c, a), g(a, b)],
            barycenter: [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0],
        }
    }
}

/// Structured triangulation with counterclockwise triangles.
///
/// Periodic meshes keep all `(n+1)²` vertices of the fundamental domain so
/// that non-periodic fields (with an affine part) have a place to live;
/// `periodic_index` maps each vertex to one of the `n²` free vertices of the
/// torus.
#[derive(Debug, Clone)]
pub struct TriMesh {
    domain: Option<Domain>,
    resolution: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_loop: Vec<usize>,
    periodicity: Periodicity,
    periodic_index: Vec<usize>,
    n_free: usize,
    geometry: Vec<ElementGeometry>,
}

impl TriMesh {
    fn assemble(
        domain: Option<Domain>,
        resolution: usize,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_loop: Vec<usize>,
        periodicity: Periodicity,
        periodic_index: Vec<usize>,
        n_free: usize,
    ) -> Self {
        let geometry =
            triangles.iter().map(|t| ElementGeometry::new([vertices[t[0]], vertices[t[1]], vertices[t[2]]])).collect();
        TriMesh {
            domain,
            resolution,
            vertices,
            triangles,
            boundary_loop,
            periodicity,
            periodic_index,
            n_free,
            geometry,
        }
    }

    /// A non-periodic mesh from explicit data; validated.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, boundary_loop: Vec<usize>) -> Result<Self> {
        let n = vertices.len();
        if triangles.iter().flatten().any(|&v| v >= n) || boundary_loop.iter().any(|&v| v >= n) {
            return Err(Error::InvalidMesh("vertex index out of range".into()));
        }
        let mesh = Self::assemble(None, 0, vertices, triangles, boundary_loop, Periodicity::None, (0..n).collect(), n);
        mesh.validate()?;
        Ok(mesh)
    }

    /// Same connectivity and boundary loop, moved vertices, no validation.
    /// Used for image triangulations of P1 maps, whose orientation may fail.
    pub fn with_positions(&self, vertices: Vec<[f64; 2]>) -> TriMesh {
        assert_eq!(vertices.len(), self.vertices.len());
        let n = vertices.len();
        Self::assemble(
            None,
            self.resolution,
            vertices,
            self.triangles.clone(),
            self.boundary_loop.clone(),
            Periodicity::None,
            (0..n).collect(),
            n,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, g)) = self.geometry.iter().enumerate().find(|(_, g)| !(g.area > 0.0)) {
            return Err(Error::InvalidMesh(format!("triangle {i} has signed area {:e}", g.area)));
        }
        if self.periodicity == Periodicity::None && !polygon::is_simple(&self.boundary_points()) {
            return Err(Error::InvalidMesh("boundary loop is not a simple polygon".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> Option<Domain> {
        self.domain
    }
    pub fn resolution(&self) -> usize {
        self.resolution
    }
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }
    pub fn periodicity(&self) -> Periodicity {
        self.periodicity
    }
    pub fn is_periodic(&self) -> bool {
        self.periodicity != Periodicity::None
    }
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }
    /// Number of vertices after periodic identification.
    pub fn n_free_vertices(&self) -> usize {
        self.n_free
    }
    /// Vertex → free-vertex index (identity for non-periodic meshes).
    pub fn periodic_index(&self) -> &[usize] {
        &self.periodic_index
    }
    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }
    pub fn element(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn boundary_points(&self) -> Vec<[f64; 2]> {
        self.boundary_loop.iter().map(|&v| self.vertices[v]).collect()
    }

    /// Flags vertices on the boundary loop.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for &v in &self.boundary_loop {
            mask[v] = true;
        }
        mask
    }

    /// Whether the boundary loop is a convex polygon (collinear runs allowed).
    pub fn is_convex(&self) -> bool {
        polygon::is_convex(&self.boundary_points())
    }

    /// Mesh size: the longest edge.
    pub fn mesh_size(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| {
                    let (a, b) = (self.vertices[t[k]], self.vertices[t[(k + 1) % 3]]);
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_mesh(domain: Domain, resolution: usize) -> Result<TriMesh> {
    build_mesh_with_budget(domain, resolution, DEFAULT_TRIANGLE_BUDGET)
}

pub fn build_mesh_with_budget(domain: Domain, resolution: usize, budget: usize) -> Result<TriMesh> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!("resolution {resolution} < 2")));
    }
    let requested = match domain {
        Domain::UnitSquare | Domain::PeriodicCell => 2usize.saturating_mul(resolution).saturating_mul(resolution),
        Domain::RegularNgon { n_sides, radius } => {
            if n_sides < 3 {
                return Err(Error::InvalidInput(format!("n_sides {n_sides} < 3")));
            }
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidInput(format!("radius {radius} must be positive")));
            }
            n_sides.saturating_mul(resolution).saturating_mul(resolution)
        }
    };
    if requested > budget {
        return Err(Error::MeshBudget { requested, budget });
    }
    let mesh = match domain {
        Domain::UnitSquare => square(resolution, false),
        Domain::PeriodicCell => square(resolution, true),
        Domain::RegularNgon { n_sides, radius } => ngon(n_sides, radius, resolution),
    };
    mesh.validate()?;
    Ok(mesh)
}

fn square(n: usize, periodic: bool) -> TriMesh {
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints so that periodic images coincide bit for bit
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary_loop = Vec::with_capacity(4 * n);
    boundary_loop.extend((0..n).map(|i| idx(i, 0)));
    boundary_loop.extend((0..n).map(|j| idx(n, j)));
    boundary_loop.extend((0..n).map(|i| idx(n - i, n)));
    boundary_loop.extend((0..n).map(|j| idx(0, n - j)));

    let (periodicity, periodic_index, n_free) = if periodic {
        let mut map = vec![0; vertices.len()];
        for j in 0..=n {
            for i in 0..=n {
                map[idx(i, j)] = (j % n) * n + (i % n);
            }
        }
        (Periodicity::UnitSquareIdentification, map, n * n)
    } else {
        let nv = vertices.len();
        (Periodicity::None, (0..nv).collect(), nv)
    };
    let domain = if periodic { Domain::PeriodicCell } else { Domain::UnitSquare };
    TriMesh::assemble(Some(domain), n, vertices, triangles, boundary_loop, periodicity, periodic_index, n_free)
}

/// Fan-and-ring triangulation: each sector (center, C_s, C_{s+1}) is split
/// into `m²` congruent triangles; ring `k` has `k` segments per side.
fn ngon(n_sides: usize, radius: f64, m: usize) -> TriMesh {
    let corners: Vec<[f64; 2]> = (0..n_sides)
        .map(|s| {
            let th = std::f64::consts::TAU * s as f64 / n_sides as f64;
            [radius * th.cos(), radius * th.sin()]
        })
        .collect();
    let mut vertices = vec![[0.0, 0.0]];
    // ring_start[k] = index of first vertex of ring k (k ≥ 1); ring k has n_sides·k vertices
    let mut ring_start = vec![0usize; m + 1];
    for k in 1..=m {
        ring_start[k] = vertices.len();
        let r = k as f64 / m as f64;
        for s in 0..n_sides {
            let (a, b) = (corners[s], corners[(s + 1) % n_sides]);
            for t in 0..k {
                let w = t as f64 / k as f64;
                vertices.push([r * ((1.0 - w) * a[0] + w * b[0]), r * ((1.0 - w) * a[1] + w * b[1])]);
            }
        }
    }
    let ring_vertex = |k: usize, s: usize, t: usize| -> usize {
        if k == 0 {
            0
        } else {
            let len = n_sides * k;
            ring_start[k] + (s * k + t) % len
        }
    };
    let mut triangles = Vec::with_capacity(n_sides * m * m);
    for k in 1..=m {
        for s in 0..n_sides {
            for t in 0..k {
                triangles.push([ring_vertex(k - 1, s, t), ring_vertex(k, s, t), ring_vertex(k, s, t + 1)]);
                if t + 1 < k {
                    triangles.push([ring_vertex(k - 1, s, t), ring_vertex(k, s, t + 1), ring_vertex(k - 1, s, t + 1)]);
                }
            }
        }
    }
    let boundary_loop: Vec<usize> = (0..n_sides * m).map(|i| ring_start[m] + i).collect();
    let nv = vertices.len();
    TriMesh::assemble(
        Some(Domain::RegularNgon { n_sides, radius }),
        m,
        vertices,
        triangles,
        boundary_loop,
        Periodicity::None,
        (0..nv).collect(),
        nv,
    )
}
