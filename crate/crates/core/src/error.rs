use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unresolvable radius: tau = {tau} is below the grid step h = {h}")]
    UnresolvableRadius { tau: f64, h: f64 },

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("operator family is empty")]
    EmptyFamily,

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("stencil of node {0:?} leaves the grid")]
    StencilOutsideGrid([usize; 3]),

    #[error("inner iteration did not converge after {sweeps} sweeps (residual trace tail {trace:?})")]
    InnerDiverged { sweeps: usize, trace: Vec<f64> },

    #[error("outer iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    OuterDiverged { iterations: usize, increment: f64 },

    #[error("solve failed for eps = {eps}: {source}")]
    Solve {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("set is empty: {0}")]
    EmptySet(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no free boundary")]
    NoFreeBoundary,

    #[error("time {0} is not a grid level")]
    OffGrid(f64),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data assumptions violated: {0}")]
    Assumptions(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
