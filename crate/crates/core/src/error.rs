use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("curvature must be -1 or +1, got {0}")]
    InvalidModel(i32),

    #[error("expected a vector of length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point {index} is off the manifold (residual {residual:.3e})")]
    OffManifold { index: usize, residual: f64 },

    #[error("point {index} lies on the lower sheet (x1 = {first})")]
    WrongSheet { index: usize, first: f64 },

    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),

    #[error("vector cannot be normalized onto the manifold (eps*<v,v> = {0:.3e})")]
    NotNormalizable(f64),

    #[error("distance argument {0} is outside the legal domain")]
    DomainError(f64),

    #[error("bad index set: {0}")]
    BadIndexSet(String),

    #[error("singular block in Schur complement (det = {0:.3e})")]
    SingularBlock(f64),

    #[error("bad face: {0}")]
    BadFace(String),

    #[error("projection undefined: point is at distance pi/2 from the plane (radicand {0:.3e})")]
    ProjectionUndefined(f64),

    #[error("oracle failed: {0}")]
    OracleFailure(String),

    #[error("random simplex generation exhausted after {0} attempts")]
    GenerationExhausted(usize),
}

impl Error {
    /// Stable machine-readable code used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "InvalidModel",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OffManifold { .. } => "OffManifold",
            Error::WrongSheet { .. } => "WrongSheet",
            Error::DegenerateSimplex(_) => "DegenerateSimplex",
            Error::NotNormalizable(_) => "NotNormalizable",
            Error::DomainError(_) => "DomainError",
            Error::BadIndexSet(_) => "BadIndexSet",
            Error::SingularBlock(_) => "SingularBlock",
            Error::BadFace(_) => "BadFace",
            Error::ProjectionUndefined(_) => "ProjectionUndefined",
            Error::OracleFailure(_) => "OracleFailure",
            Error::GenerationExhausted(_) => "GenerationExhausted",
        }
    }
}
