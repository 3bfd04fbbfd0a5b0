use thiserror::Error;

/// Errors raised across the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polynomial is identically zero")]
    EmptyPolynomial,
    #[error("evaluation point coincides with a pole at s = {0}")]
    PoleHit(String),
    #[error("division by a function that is identically zero")]
    DivideByZeroFunction,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("algebraic loop: {0}")]
    AlgebraicLoop(String),
    #[error("rational matrix is singular (determinant identically zero)")]
    SingularMatrixFunction,
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("all entries of the numerator matrix are zero")]
    ZeroMatrix,
    #[error("eliminated block is identically zero")]
    SingularEliminationBlock,
    #[error("locus passes within {distance:.3e} of the encirclement point (guard {guard:.3e})")]
    OriginPass { distance: f64, guard: f64 },
    #[error("winding number unresolved: accumulated {turns:.4} turns")]
    UnresolvedWinding { turns: f64 },
    #[error("subsystem is not open-loop stable: {0}")]
    OpenLoopUnstable(String),
    #[error("eigenvalue branch tracking failed near {omega:.6e} rad/s")]
    BranchTrackingFailure { omega: f64 },
    #[error("frequency grid is not uniform: {0}")]
    NonUniformGrid(String),
    #[error("mode fit diverged: {0}")]
    FitDiverged(String),
    #[error("inconsistent verdicts across domains: {0}")]
    InconsistentDomains(String),
    #[error("symmetry violation {violation:.3e} exceeds tolerance {tol:.1e}")]
    SymmetryViolation { violation: f64, tol: f64 },
    #[error("operating point infeasible: {0}")]
    OperatingPointInfeasible(String),
    #[error("port not available: {0}")]
    PortNotAvailable(String),
    #[error("eigenvalue computation did not converge")]
    EigenNoConvergence,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
