use serde::Serialize;

use crate::grid::{polygon, TriMesh};

/// Squares holding fewer triangle barycenters than this are flagged under-resolved.
pub const MIN_ELEMENTS_PER_SQUARE: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct DyadicSquare {
    pub id: usize,
    pub level: u32,
    pub corner: [f64; 2],
    pub side: f64,
    /// Triangles whose barycenter lies in the half-open square.
    pub elements: Vec<usize>,
    pub under_resolved: bool,
    /// The closed square lies in the mesh domain.
    pub inside: bool,
    /// The concentric square of twice the side lies in the mesh domain.
    pub double_inside: bool,
}

/// Dyadic subdivisions of the bounding square of a mesh, levels `0..=max_level`.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicSquareSet {
    pub origin: [f64; 2],
    pub side: f64,
    pub max_level: u32,
    pub squares: Vec<DyadicSquare>,
}

impl DyadicSquareSet {
    pub fn level(&self, level: u32) -> impl Iterator<Item = &DyadicSquare> {
        self.squares.iter().filter(move |s| s.level == level)
    }
}

pub fn dyadic_squares(mesh: &TriMesh, max_level: u32) -> DyadicSquareSet {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in mesh.vertices() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let boundary = mesh.boundary_points();
    let mut squares = Vec::new();
    for level in 0..=max_level {
        let cells = 1usize << level;
        let s = side / cells as f64;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
        for (t, g) in mesh.geometry().iter().enumerate() {
            let cell = |k: usize| -> usize {
                let x = ((g.barycenter[k] - lo[k]) / side * cells as f64).floor();
                (x.max(0.0) as usize).min(cells - 1)
            };
            members[cell(1) * cells + cell(0)].push(t);
        }
        for (c, elements) in members.into_iter().enumerate() {
            let corner = [lo[0] + (c % cells) as f64 * s, lo[1] + (c / cells) as f64 * s];
            let inside = polygon::contains_square(&boundary, corner, s);
            let double_inside =
                inside && polygon::contains_square(&boundary, [corner[0] - 0.5 * s, corner[1] - 0.5 * s], 2.0 * s);
            squares.push(DyadicSquare {
                id: squares.len(),
                level,
                corner,
                side: s,
                under_resolved: elements.len() < MIN_ELEMENTS_PER_SQUARE,
                elements,
                inside,
                double_inside,
            });
        }
    }
    DyadicSquareSet { origin: lo, side, max_level, squares }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mesh, Domain};

    #[test]
    fn counts_and_partition() {
        let mesh = build_mesh(Domain::UnitSquare, 8).unwrap();
        assert_eq!(dyadic_squares(&mesh, 0).squares.len(), 1);
        let set = dyadic_squares(&mesh, 2);
        assert_eq!(set.squares.len(), 21);
        for level in 0..=2 {
            let mut seen = vec![0u32; mesh.n_triangles()];
            for sq in set.level(level) {
                assert!((sq.side - 0.5f64.powi(level as i32)).abs() < 1e-15);
                for &t in &sq.elements {
                    seen[t] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn flags() {
        let mesh = build_mesh(Domain::UnitSquare, 8).unwrap();
        let set = dyadic_squares(&mesh, 3);
        assert!(set.squares.iter().all(|s| s.inside));
        // level 3 squares hold 2 triangles each
        assert!(set.level(3).all(|s| s.under_resolved));
        assert!(set.level(2).all(|s| !s.under_resolved));
        // only the four central level-2 squares have their double inside the unit square
        assert_eq!(set.level(2).filter(|s| s.double_inside).count(), 4);
        assert!(set.level(0).all(|s| !s.double_inside));
    }
}
