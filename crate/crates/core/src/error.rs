use thiserror::Error;

use crate::cylinder::CompatibilityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: model has d = {model}, grid has d = {grid}")]
    DimensionMismatch { model: usize, grid: usize },

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("diffusion is not uniformly elliptic: minimum sampled diagonal entry {min}")]
    NonElliptic { min: f64 },

    #[error("central differencing cannot certify positivity; use the upwind scheme")]
    PositivityNotCertifiable,

    #[error("the discrete adjoint is only defined for conormal bases")]
    AdjointOfDirichlet,

    #[error("singular pure-Neumann system solved without an anchor constraint")]
    SingularWithoutAnchor,

    #[error("anchored solve requires constants in the kernel (max row sum {row_sum:e})")]
    AnchorKernelMismatch { row_sum: f64 },

    #[error("iteration limit {max_iter} exceeded (last residual {residual:e})")]
    IterationLimitExceeded { max_iter: usize, residual: f64 },

    #[error("solve residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("ground state has non-positive entry {value:e} at cell {cell}")]
    NonPositiveGroundState { cell: usize, value: f64 },

    #[error("need at least {needed} unit windows on the {side} side, found {found}")]
    InsufficientWindows { side: &'static str, needed: usize, found: usize },

    #[error(
        "data violate the compatibility condition: functional {:e} against tolerance {:e}",
        .0.functional,
        .0.tolerance
    )]
    IncompatibleData(Box<CompatibilityReport>),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
