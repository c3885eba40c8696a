use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(&'static str),
    #[error("function undefined at eigenvalue {0}")]
    DomainError(f64),
    #[error("matrix is not idempotent (defect {defect:.3e} exceeds {tol:.3e})")]
    NotIdempotent { defect: f64, tol: f64 },
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error("Q + Q* - I is numerically singular (inverse norm {0:.3e})")]
    SingularPencil(f64),
    #[error("idempotent is a projection; a non-projection is required")]
    IsProjection,
    #[error("target {alpha} outside [{min}, {max}]")]
    OutOfRange { alpha: f64, min: f64, max: f64 },
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("check `{what}` failed: residual {residual:.3e} exceeds {tol:.3e}")]
    Verification {
        what: &'static str,
        residual: f64,
        tol: f64,
    },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
