use thiserror::Error;

/// Errors raised by problem construction, the solvers and the simulation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("non-finite value in {term}")]
    NonFinite { term: String },

    #[error("curvature overflow in block {block}: c = {curvature:e} exceeds cap {cap:e}")]
    CurvatureOverflow {
        block: usize,
        curvature: f64,
        cap: f64,
    },

    #[error("no convergence after {rounds} outer rounds (omega = {omega:e}, |G| = {feasibility:e})")]
    NoConvergence {
        rounds: usize,
        omega: f64,
        feasibility: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("config parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn dim(what: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            got,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
