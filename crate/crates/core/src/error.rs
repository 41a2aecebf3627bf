//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors produced by validation, simulation, classification, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An off-diagonal entry of the coupling matrix is negative.
    #[error("matrix is not Metzler: A[{row}][{col}] = {value} < 0")]
    NotMetzler { row: usize, col: usize, value: f64 },

    /// The coupling matrix has an eigenvalue with nonnegative real part.
    #[error("matrix is not Hurwitz: spectral abscissa {abscissa} >= -1e-9")]
    NotHurwitz { abscissa: f64 },

    /// An input-gain entry is not strictly positive.
    #[error("input gain is not strictly positive: b[{index}] = {value}")]
    NonPositiveInput { index: usize, value: f64 },

    /// Vector/matrix dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A dense linear solve broke down on a matrix that validated as Hurwitz.
    #[error("singular matrix: linear solve residual {residual} exceeds tolerance")]
    SingularMatrix { residual: f64 },

    /// A guarded denominator crossed the positivity floor during integration.
    #[error("domain violation at t = {t}: guarded denominator fell below x_floor")]
    DomainViolation { t: f64 },

    /// The adaptive step size underflowed before reaching the horizon.
    #[error("step failure at t = {t}: step size {h} underflowed")]
    StepFailure { t: f64, h: f64 },

    /// Operation defined only for scalar motif kinds.
    #[error("unsupported motif kind {kind}: scalar closed forms exist only for scalar kinds")]
    UnsupportedKind { kind: String },

    /// The adapted steady state is nonfinite for the requested configuration.
    #[error("no steady state: solving F(x_ss, y, u) = 0 produced a nonfinite value for {kind}")]
    NoSteadyState { kind: String },

    /// Motif name not in the catalog.
    #[error("unknown motif name {name:?}; closest match: {suggestion:?}")]
    UnknownMotif { name: String, suggestion: String },

    /// Parameter outside its documented domain.
    #[error("invalid parameter: {message}")]
    InvalidParameter { message: String },

    /// Configuration file failed validation.
    #[error("invalid config at {path}: {message}")]
    InvalidConfig { path: String, message: String },

    /// A table emission was asked for a verdict that was never computed.
    #[error("missing verdict for {motif}")]
    MissingVerdict { motif: String },

    /// The derivative profile straddles the zero band and no witness pair confirms a sign change.
    #[error("inconclusive classification for {motif}: mixed profile without confirmed witnesses")]
    Inconclusive { motif: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter { message: message.into() }
    }
}
