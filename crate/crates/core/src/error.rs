use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge: {0}")]
    EigenNonConvergence(String),

    #[error("grid too narrow: boundary amplitude {amplitude:.3e} exceeds {threshold:.1e}; widen half_width")]
    GridTooNarrow { amplitude: f64, threshold: f64 },

    #[error("root bracket failure at s = {s}: {detail}")]
    BracketFailure { s: f64, detail: String },

    #[error("quadrature did not converge after {doublings} doublings (last estimate {estimate:.6e}, previous {previous:.6e})")]
    QuadratureNonConvergence {
        doublings: usize,
        estimate: f64,
        previous: f64,
    },

    #[error("rate integral has negative real part {value:.3e} (scale {scale:.3e}); branch tracking failed")]
    NegativeRate { value: f64, scale: f64 },

    #[error("rate evaluation failed at s = {s}: {source}")]
    RateAt {
        s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("single well: no barrier between minima at s = {s}")]
    SingleWell { s: f64 },

    #[error("{0}")]
    Fit(String),

    #[error("problem has no known ground state")]
    MissingGround,

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::EigenNonConvergence(_) => "eigen_nonconvergence",
            Error::GridTooNarrow { .. } => "grid_too_narrow",
            Error::BracketFailure { .. } => "bracket_failure",
            Error::QuadratureNonConvergence { .. } => "quadrature_nonconvergence",
            Error::NegativeRate { .. } => "negative_rate",
            Error::RateAt { .. } => "rate_failure",
            Error::SingleWell { .. } => "single_well",
            Error::Fit(_) => "fit",
            Error::MissingGround => "missing_ground",
            Error::SizeGuard(_) => "size_guard",
            Error::Config(_) => "config",
            Error::Context { source, .. } => source.kind(),
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
