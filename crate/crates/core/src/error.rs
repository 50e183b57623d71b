use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal `{0}` has fewer than two samples")]
    EmptySignal(String),
    #[error("signal `{0}` has timestamps that are not strictly increasing or lie outside [t0, t1]")]
    NonMonotonicTimestamps(String),
    #[error("signal `{signal}` has {got} samples; cubic spline needs at least 4")]
    InsufficientSamplesForSpline { signal: String, got: usize },
    #[error("scenario `{scenario}` is missing static parameter `{name}`")]
    MissingStatic { scenario: String, name: String },
    #[error("scenario `{scenario}` is missing signal `{name}`")]
    MissingSignal { scenario: String, name: String },
    #[error("parameter {0} has zero variance over the dataset")]
    ZeroVariance(usize),
    #[error("split of {n} items with test fraction {fraction} leaves an empty side")]
    DegenerateSplit { n: usize, fraction: f64 },
    #[error("d = {d} exceeds min(n_x, N_x) = {max}")]
    DTooLarge { d: usize, max: usize },
    #[error("singular value {0} is zero; projection is undefined")]
    ZeroSingularValue(usize),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("transport solver did not converge after {0} pivots")]
    SolverNonConvergence(usize),
    #[error("all points are identical; bandwidth selection is undefined")]
    AllPointsIdentical,
    #[error("scenario duration must be positive, got {0}")]
    NegativeDuration(f64),
    #[error("covariance matrix is singular after regularization")]
    SingularCovariance,
    #[error("correlation is undefined for a constant series")]
    CorrelationDegenerate,
    #[error("d/beta iteration did not converge; trace {trace:?}")]
    NonConvergence { trace: Vec<(usize, f64)> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySignal(_) => "empty_signal",
            Error::NonMonotonicTimestamps(_) => "non_monotonic_timestamps",
            Error::InsufficientSamplesForSpline { .. } => "insufficient_samples_for_spline",
            Error::MissingStatic { .. } => "missing_static",
            Error::MissingSignal { .. } => "missing_signal",
            Error::ZeroVariance(_) => "zero_variance",
            Error::DegenerateSplit { .. } => "degenerate_split",
            Error::DTooLarge { .. } => "d_too_large",
            Error::ZeroSingularValue(_) => "zero_singular_value",
            Error::LayoutMismatch(_) => "layout_mismatch",
            Error::SolverNonConvergence(_) => "solver_non_convergence",
            Error::AllPointsIdentical => "all_points_identical",
            Error::NegativeDuration(_) => "negative_duration",
            Error::SingularCovariance => "singular_covariance",
            Error::CorrelationDegenerate => "correlation_degenerate",
            Error::NonConvergence { .. } => "non_convergence",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by bad input rather than by a defect.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::SolverNonConvergence(_))
    }
}
