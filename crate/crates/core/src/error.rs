use thiserror::Error;

/// Errors produced by the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A finite result would not fit in an `f64`.
    #[error("result of {what} is out of range ({detail})")]
    OutOfRange { what: &'static str, detail: String },

    /// A series did not reach the requested tolerance within its term budget.
    #[error("{what} did not converge after {terms} terms (last relative contribution {bound:e})")]
    Truncation {
        what: &'static str,
        terms: usize,
        bound: f64,
    },

    /// Adaptive quadrature could not meet its tolerance.
    #[error("quadrature failed on [{a}, {b}]: estimated error {abs_err:e} after {intervals} intervals")]
    Quadrature {
        a: f64,
        b: f64,
        abs_err: f64,
        intervals: usize,
    },

    /// The damped law has no stationary density unless `lambda * v == mu * c`.
    #[error("no stationary law: lambda*v = {lambda_v} differs from mu*c = {mu_c}")]
    NoStationaryLaw { lambda_v: f64, mu_c: f64 },

    /// A model or evaluator combination that is not supported.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A textual specification could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A simulated path exceeded the switch cap.
    #[error("path simulation exceeded {cap} switches before time {t}")]
    SwitchCap { cap: u64, t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}
