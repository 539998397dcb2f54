use thiserror::Error;

pub type Result<T> = std::result::Result<T, RteError>;

#[derive(Debug, Error)]
pub enum RteError {
    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),
    #[error("anisotropy factor g={0} outside (-1, 1)")]
    InvalidAnisotropy(f64),
    #[error("non-real spectrum: eigenvalue with imaginary part {imag:e}")]
    NonRealSpectrum { imag: f64 },
    #[error("degenerate spectrum in cell {cell}: {reason}")]
    DegenerateSpectrum { cell: usize, reason: String },
    #[error("point ({x}, {y}) outside cell {cell}")]
    PointOutsideCell { cell: usize, x: f64, y: f64 },
    #[error("rank-deficient interface space at interface {interface} (column norm {norm:e})")]
    RankDeficient { interface: usize, norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mesh with I={cells} and L={levels} is not dyadic with coarsest size in {{1,2,4}}")]
    NonDyadicMesh { cells: usize, levels: usize },
    #[error("singular local system at level {level}, cell {cell} (condition {cond:e})")]
    SingularLocalSystem { level: usize, cell: usize, cond: f64 },
    #[error("coarsest system is singular (condition {cond:e})")]
    CoarseSingular { cond: f64 },
    #[error("singular cell system for cell {cell}")]
    SingularCellSystem { cell: usize },
    #[error("singular full-order system")]
    SingularSystem,
    #[error("{what} of size {size} exceeds the limit {limit}")]
    SizeGuard { what: String, size: usize, limit: usize },
    #[error("fixed-point iteration did not converge after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("config error in `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("expression error: {0}")]
    Expression(String),
    #[error("factorization file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RteError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        RteError::InvalidConfig { field: field.to_string(), message: message.into() }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RteError::InvalidConfig { .. }
            | RteError::Expression(_)
            | RteError::InvalidQuadrature(_)
            | RteError::InvalidAnisotropy(_)
            | RteError::NonDyadicMesh { .. }
            | RteError::Io(_) => 1,
            _ => 2,
        }
    }
}
