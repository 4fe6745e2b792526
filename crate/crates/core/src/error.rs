use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("undefined roots: polynomial is identically zero")]
    UndefinedRoots,

    #[error("polynomial has a non-finite coefficient")]
    NonFiniteCoefficient,

    #[error("eigenvalue iteration did not converge for degree {degree}")]
    EigenNonConvergence { degree: usize },

    #[error("evaluation at pole: denominator vanishes at {re} + {im}j")]
    EvaluationAtPole { re: f64, im: f64 },

    #[error("frequency {omega} rad/s lies on a pole")]
    FrequencyAtPole { omega: f64 },

    #[error("frequency grid must be strictly increasing (index {index})")]
    GridNotIncreasing { index: usize },

    #[error("frequency {omega} rad/s exceeds the Nyquist frequency {nyquist} rad/s")]
    AboveNyquist { omega: f64, nyquist: f64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("denominator is identically zero")]
    ZeroDenominator,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("peak undefined for unstable system")]
    UnstableSystem,

    #[error("quadrature did not converge: achieved error estimate {achieved:e} (requested {requested:e})")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("loop is not proper; Bode integral undefined")]
    ImproperLoop,

    #[error("no stability change inside bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("at parameter value {value}: {source}")]
    AtParameter {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, message: msg.into() }
    }
}
