use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constraint `{name}` violated (residual {residual:e})")]
    ConstraintViolation { name: String, residual: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("spectrum is not Hermitian: imaginary residual {residual:e} exceeds {limit:e}")]
    SymmetryViolation { residual: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Gevrey weight overflow: exponent {exponent} exceeds {limit}")]
    Overflow { exponent: f64, limit: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last distance {distance:e})")]
    NoConvergence { iterations: usize, distance: f64 },

    #[error("Picard quadrature under-resolved: halving the mesh moved the solution by {change:e} (limit {limit:e})")]
    QuadratureResolution { change: f64, limit: f64 },

    #[error("blow-up at t = {t}: norm {norm:e} exceeds ceiling {ceiling:e}")]
    BlowUp { t: f64, norm: f64, ceiling: f64 },

    #[error(
        "radius collapse at t = {t}: sigma {sigma:e} below resolvable threshold {threshold:e}"
    )]
    StepCollapse { t: f64, sigma: f64, threshold: f64 },

    #[error("{lemma} requires s >= {min}, got s = {s}")]
    Range { lemma: String, s: f64, min: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
