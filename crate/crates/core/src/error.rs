use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// `|μ| + |ν| ≥ 1`, or the denominator of the inverse map collapsed.
    #[error("degenerate Beltrami pair: {0}")]
    DegeneratePair(String),

    #[error("matrix is not elliptic: {0}")]
    NotElliptic(String),

    #[error("element {element}: coefficient is not elliptic ({reason})")]
    NonEllipticElement { element: usize, reason: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("mesh would have {requested} triangles, budget is {budget}")]
    MeshBudget { requested: usize, budget: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("linear solver broke down after {iterations} iterations (relative residual {residual:e})")]
    SolverBreakdown { iterations: usize, residual: f64 },

    #[error("weight is not positive on element {element} (value {value:e})")]
    NonPositiveWeight { element: usize, value: f64 },

    #[error("F_z vanishes; the ν-reduction is undefined")]
    VanishingDerivative,

    #[error("map is not injective: {0}")]
    NotInjective(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
