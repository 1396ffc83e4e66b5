use thiserror::Error;

/// Errors raised by model construction and by the numeric routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),

    #[error("chain is {property}: no unique stationary distribution")]
    NoUniqueStationary { property: &'static str },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("invalid regression problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("block length k = {k} must divide {what} = {value}")]
    Divisibility {
        k: usize,
        what: &'static str,
        value: usize,
    },

    #[error(
        "second-moment matrix is singular (lambda_min = {lambda_min:e}); \
         the linear class requires lambda_min(E XX^T) > 0"
    )]
    SingularCovariance { lambda_min: f64 },

    #[error("hypothesis class is empty")]
    EmptyClass,

    #[error("function {index} has zero L2 norm")]
    ZeroNorm { index: usize },

    #[error("lambda = {lambda} outside the admissible range [0, {upper})")]
    InadmissibleLambda { lambda: f64, upper: f64 },

    #[error("q = {q} and q' = {q_conj} are not Hoelder conjugates: |1/q + 1/q' - 1| = {gap:e}")]
    NotConjugate { q: f64, q_conj: f64, gap: f64 },

    #[error(
        "no block length k <= {n} satisfies k / beta(k) >= n / delta = {required:e}; \
         best ratio was {best:e} at k = {best_k}"
    )]
    MixingTooSlow {
        n: usize,
        required: f64,
        best: f64,
        best_k: usize,
    },

    #[error("non-finite profile value at r = {r}")]
    NonFinite { r: f64 },

    #[error("exact enumeration needs {size} outcomes, above the cap of {cap}")]
    EnumerationTooLarge { size: f64, cap: f64 },

    #[error("no n on the grid lies past the burn-in ({detail}); extend the n grid")]
    NoPointPastBurnIn { detail: String },

    #[error("rate fit needs {needed} positive points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
