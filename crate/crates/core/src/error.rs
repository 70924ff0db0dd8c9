use thiserror::Error;

/// Errors raised by the numerical and closed-form routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("field does not conform to the metric grid: expected {expected} values, got {got}")]
    NonConforming { expected: usize, got: usize },

    #[error("unsupported ansatz for {op}: {detail}")]
    Unsupported { op: &'static str, detail: String },

    #[error("curvature model unavailable: {0}")]
    CurvatureModelUnavailable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("bracket ({lo}, {hi}) contains no interior minimum; expand the bracket")]
    Bracket { lo: f64, hi: f64 },

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("step size error: {0}")]
    StepSize(String),

    #[error("unknown entry `{name}`; known entries: {known}")]
    Unknown { name: String, known: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
