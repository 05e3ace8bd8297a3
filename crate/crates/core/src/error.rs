use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A kernel failed one of its structural constraints (positivity at the
    /// origin, monotonicity, finite second moment).
    #[error("kernel constraint violated: {0}")]
    KernelConstraint(String),

    /// An integral required by the requested operation does not converge.
    #[error("infeasible integral: {0}")]
    InfeasibleIntegral(String),

    /// Rejection sampling acceptance rate collapsed below the configured floor.
    #[error("pathological density: acceptance rate {rate:.3e} fell below {floor:.1e} after {proposals} proposals")]
    PathologicalDensity {
        rate: f64,
        floor: f64,
        proposals: u64,
    },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    /// A node field does not line up with the point cloud it is evaluated on.
    #[error("misaligned field: {0}")]
    MisalignedField(String),

    /// Iterative solver failed to reach its tolerance; carries the residual it
    /// stopped at.
    #[error("solver did not converge: {context} (residual {residual:.3e} after {iterations} iterations)")]
    Convergence {
        context: String,
        residual: f64,
        iterations: usize,
    },

    /// A finite-difference probe was requested below the resolution of the
    /// underlying grid.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// Evaluation requested at a point where the field is not defined (for
    /// instance on a jump surface).
    #[error("undefined point: {0}")]
    UndefinedPoint(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
