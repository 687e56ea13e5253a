use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("coefficient a_{index} = {value} is not positive")]
    NonPositiveCoefficient { index: i64, value: f64 },

    #[error("index {index} is outside the allowed range (cap {cap})")]
    IndexOutOfRange { index: i64, cap: usize },

    #[error("spectral point rejected: {0}")]
    InvalidPoint(String),

    #[error("variation tail {eps:e} at n = {n} is not below {tol:e}")]
    TailNotReached { n: usize, eps: f64, tol: f64 },

    #[error("tail start did not converge: N = {n}, change {estimate:e}")]
    TailNotConverged { n: usize, estimate: f64 },

    #[error("equation residual {residual:e} exceeds tolerance at n = {n}")]
    EquationResidual { n: usize, residual: f64 },

    #[error("Neumann term {k} does not decrease ({current:e} > {previous:e})")]
    NeumannDivergence { k: usize, current: f64, previous: f64 },

    #[error("overflow in polynomial recurrence at n = {0}")]
    Overflow(usize),

    #[error("no start index with nonvanishing Jost solution below {0}")]
    NoStartIndex(usize),

    #[error("sequence did not stabilize by n = {n} (last change {delta:e})")]
    NotStabilized { n: usize, delta: f64 },

    #[error("point is an eigenvalue (|Omega| = {0:e})")]
    AtEigenvalue(f64),

    #[error("model violates the Hilbert-Schmidt condition: {0}")]
    NotHilbertSchmidt(String),

    #[error("bisection could not separate eigenvalue {0}")]
    BisectionFailure(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidModel(_)
            | Error::InvalidPoint(_)
            | Error::IndexOutOfRange { .. }
            | Error::NotHilbertSchmidt(_)
            | Error::Config(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            4 => "io",
            _ => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
