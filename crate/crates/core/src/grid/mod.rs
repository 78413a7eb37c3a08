//! Structured P1 triangulations, nodal and element fields, and dyadic squares.

mod dyadic;
mod export;
mod field;
mod mesh;
pub mod polygon;

pub use dyadic::{dyadic_squares, DyadicSquare, DyadicSquareSet, MIN_ELEMENTS_PER_SQUARE};
pub use export::{write_triangle_csv, write_vertex_csv};
pub use field::{element_gradient, ElementMatrixField, ScalarFieldP1};
pub use mesh::{
    build_mesh, build_mesh_with_budget, Domain, ElementGeometry, Periodicity, TriMesh, DEFAULT_TRIANGLE_BUDGET,
};
