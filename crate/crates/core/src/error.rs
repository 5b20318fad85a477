use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension n = {0} (need n >= 2)")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not skew-Hermitian (max deviation {deviation:.3e})")]
    NotSkewHermitian { deviation: f64 },

    #[error("matrix is not traceless (|trace| = {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pair is not simultaneously diagonalizable (commutator residual {residual:.3e})")]
    NotSimultaneouslyDiagonalizable { residual: f64 },

    #[error("not a steady pair: commutator residual {commutator:.3e}, laplacian residual {laplacian:.3e}")]
    NotSteady { commutator: f64, laplacian: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("singular Newton Jacobian at iteration {iteration}; perturb the initial guess")]
    SingularJacobian { iteration: usize },

    #[error("implicit midpoint solve did not converge in {iterations} iterations (residual {residual:.3e}); try a smaller step")]
    InnerNonConvergence { iterations: usize, residual: f64 },

    #[error("integration failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
