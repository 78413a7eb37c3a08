use serde::Serialize;

use super::SigmaHarmonicMap;
use crate::error::{Error, Result};
use crate::grid::{polygon, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Unimodality {
    pub is_unimodal: bool,
    /// Unimodal with no flat steps between consecutive samples.
    pub is_strict: bool,
    /// Loop positions of a maximum and a minimum: the ends of the two arcs.
    pub split: Option<(usize, usize)>,
    /// All samples equal (within tolerance).
    pub constant: bool,
}

/// Checks whether cyclic samples rise along one arc and fall along the other.
pub fn unimodality_check(g: &[f64]) -> Result<Unimodality> {
    let n = g.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("{n} boundary samples, need at least 3")));
    }
    let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let tol = 1e-12 * (hi - lo).max(hi.abs()).max(lo.abs());
    if hi - lo <= tol {
        return Ok(Unimodality { is_unimodal: false, is_strict: false, split: None, constant: true });
    }
    let steps: Vec<i8> = (0..n)
        .map(|k| {
            let d = g[(k + 1) % n] - g[k];
            if d > tol {
                1
            } else if d < -tol {
                -1
            } else {
                0
            }
        })
        .collect();
    let signed: Vec<i8> = steps.iter().copied().filter(|&s| s != 0).collect();
    let changes = (0..signed.len()).filter(|&k| signed[k] != signed[(k + 1) % signed.len()]).count();
    let is_unimodal = changes == 2;
    let argmax = (0..n).max_by(|&a, &b| g[a].total_cmp(&g[b]).then(b.cmp(&a))).unwrap_or(0);
    let argmin = (0..n).min_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b))).unwrap_or(0);
    Ok(Unimodality {
        is_unimodal,
        is_strict: is_unimodal && steps.iter().all(|&s| s != 0),
        split: is_unimodal.then_some((argmax, argmin)),
        constant: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub locally_injective: bool,
    pub globally_injective: bool,
    pub min_det: f64,
    pub boundary_simple: bool,
    /// `|Σ|T'| − |image polygon|| / |image polygon|`.
    pub area_gap: f64,
}

const AREA_TOL: f64 = 1e-8;

/// Injectivity of the P1 map sending each vertex of `mesh` to `image[v]`.
///
/// Global injectivity is decided by a simple, counterclockwise image boundary
/// whose enclosed area matches the total image area of the elements.
pub fn injectivity_of_vertices(mesh: &TriMesh, image: &[[f64; 2]]) -> InjectivityReport {
    let geo = mesh.geometry();
    let (min_det, image_area) = mesh.triangles().iter().zip(geo).fold((f64::INFINITY, 0.0), |(m, s), (t, g)| {
        let [a, b, c] = [image[t[0]], image[t[1]], image[t[2]]];
        let twice = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        (m.min(0.5 * twice / g.area), s + 0.5 * twice)
    });
    let locally_injective = min_det > 0.0;
    let loop_pts: Vec<[f64; 2]> = mesh.boundary_loop().iter().map(|&v| image[v]).collect();
    let boundary_simple = polygon::is_simple(&loop_pts);
    let enclosed = polygon::signed_area(&loop_pts);
    let area_gap = if enclosed > 0.0 { (image_area - enclosed).abs() / enclosed } else { f64::INFINITY };
    InjectivityReport {
        locally_injective,
        globally_injective: locally_injective && boundary_simple && area_gap <= AREA_TOL,
        min_det,
        boundary_simple,
        area_gap,
    }
}

pub fn injectivity_check(map: &SigmaHarmonicMap) -> InjectivityReport {
    injectivity_of_vertices(map.mesh(), &map.image_points())
}
