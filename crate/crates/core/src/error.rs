use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("function is not finite at eigenvalue {eigenvalue}")]
    FunctionUndefined { eigenvalue: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phase function does not decay: sup {sup:.3e} on boundary shell exceeds {eta:.3e}")]
    PhaseDecay { sup: f64, eta: f64 },

    #[error("operator is not elliptic: smallest symbol singular value {value:.3e} at x={x:?}, xi={xi:?}")]
    NotElliptic { x: Vec<f64>, xi: Vec<f64>, value: f64 },

    #[error("coefficient is not anti-Hermitian (deviation {deviation:.3e})")]
    NotAntiHermitian { deviation: f64 },

    #[error("operator is not formally self-adjoint (deviation {deviation:.3e})")]
    NotSelfAdjoint { deviation: f64 },

    #[error("spectral gap too small: near-zero threshold {gap_tol:.3e}, next eigenvalue {next:.3e}")]
    GapViolation { gap_tol: f64, next: f64 },

    #[error("resolution ambiguity: near-zero mode has resolved weight {weight:.3}")]
    ResolutionAmbiguity { weight: f64 },

    #[error("invalid cover: {0}")]
    InvalidCover(String),

    #[error("diffeomorphism is not invertible: {0}")]
    NotInvertible(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
