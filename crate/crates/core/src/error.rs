use thiserror::Error;

/// Errors raised by form construction, checks and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CnError {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch { expected: usize, got: usize, context: &'static str },

    #[error("a CN form needs at least one equality constraint")]
    NoConstraints,

    #[error("lift of x violates the constraints (residual {residual:.3e})")]
    LiftInfeasible { residual: f64 },

    #[error("form provides no lift")]
    NoLift,

    #[error("objective has no Hessian-vector product")]
    MissingHessian,

    #[error("operation needs a curvature bound (B matrix or rho) but the form is graded {grade}")]
    GradeMismatch { grade: &'static str },

    #[error("negative or zero scale {scale} applied to a non-exact form")]
    NonExactNegativeScale { scale: f64 },

    #[error("form is not exact")]
    NotExact,

    #[error("phi was not attested as convex and increasing")]
    AttestationMissing,

    #[error("phi is decreasing at t = {t} (phi' = {slope:.3e})")]
    MonotonicityRefuted { t: f64, slope: f64 },

    #[error("phi fails the midpoint convexity test on [{a}, {b}]")]
    ConvexityRefuted { a: f64, b: f64 },

    #[error("matrix is not positive semidefinite (quadratic form {value:.3e})")]
    NotPsd { value: f64 },

    #[error("line search failed: {0}")]
    LineSearchFailed(String),

    #[error("constraint {constraint} reads coordinates of more than one block")]
    NotDecomposable { constraint: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("block index {index} out of range for {blocks} blocks")]
    BlockIndexOutOfRange { index: usize, blocks: usize },

    #[error("inner minimization failed on block {block}: {reason}")]
    InnerFailure { block: usize, reason: String },

    #[error("invalid solver configuration: {0}")]
    BadConfig(String),

    #[error("invalid problem spec: {0}")]
    BadSpec(String),

    #[error("grid oracle limited to n <= 3 (got n = {n})")]
    TooLarge { n: usize },

    #[error("candidate point is not in X(g) (residual {residual:.3e})")]
    InfeasibleCandidate { residual: f64 },
}

pub type Result<T> = std::result::Result<T, CnError>;
