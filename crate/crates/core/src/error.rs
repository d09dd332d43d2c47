//! Error type shared by all library modules.

use thiserror::Error;

/// Errors produced by the forecasting and reconciliation pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A transform requiring strictly positive data met a value ≤ 0.
    #[error("non-positive value {value} at index {index}; transform requires strictly positive data")]
    NonPositiveValue { index: usize, value: f64 },

    /// The inverse transform was asked to leave its domain.
    #[error("inverse transform undefined: lambda*z + 1 = {argument} <= 0 at index {index}")]
    DomainViolation { index: usize, argument: f64 },

    /// Too few observations for the requested operation.
    #[error("series too short: need at least {needed} observations, have {have}")]
    SeriesTooShort { needed: usize, have: usize },

    /// A differencing spec does not match the series it is applied to.
    #[error("difference spec mismatch: {0}")]
    SpecMismatch(String),

    /// Model order violates the training-length feasibility restrictions.
    #[error("infeasible order {order} for series length {length}: requires {required}")]
    InfeasibleOrder {
        order: String,
        length: usize,
        required: usize,
    },

    /// The (differenced) series has zero variance; nothing to estimate.
    #[error("degenerate series: zero variance after differencing")]
    DegenerateSeries,

    /// Coefficients outside the stationary/invertible region.
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    /// Effective sample too small for the requested criterion.
    #[error("insufficient sample: n = {n} must exceed k + 1 = {}", k + 1)]
    InsufficientSample { n: usize, k: usize },

    /// Ljung-Box lag configuration is unusable.
    #[error("invalid lags: {0}")]
    InvalidLags(String),

    /// The automatic search found no order satisfying the feasibility rules.
    #[error(
        "no feasible model: every candidate order violates the training-length restriction \
         (D+P+1)*s + p + d <= {length} and (Q+1)*s + q <= {length} at period s = {period}"
    )]
    NoFeasibleModel { length: usize, period: usize },

    /// An attribute name not present in the schema.
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),

    /// A grouped structure needs at least one bottom-level key.
    #[error("empty bottom level: no fully bound series keys observed")]
    EmptyBottom,

    /// A record's key binds values outside the schema.
    #[error("key outside schema: {0}")]
    KeyOutsideSchema(String),

    /// A record quantity is NaN or infinite.
    #[error("non-finite quantity at record {index}")]
    NonFiniteQuantity { index: usize },

    /// A record's week index falls outside the job calendar.
    #[error("week index {week} outside calendar of {weeks} weeks")]
    WeekOutOfRange { week: usize, weeks: usize },

    /// Residual matrix unusable for weight estimation.
    #[error("degenerate residuals: {0}")]
    DegenerateResiduals(String),

    /// A reconciliation system could not be factorized.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// Matrix/vector dimensions disagree.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// MASE scale denominator is zero (training series is (seasonally) constant).
    #[error("zero denominator: in-sample naive errors are all zero")]
    ZeroDenominator,
}

pub type Result<T> = std::result::Result<T, Error>;
