use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only n = 2 and n = 3 are implemented")]
    UnsupportedDimension(usize),

    #[error("resolution {0} too small or odd: need an even count >= 16")]
    ResolutionTooSmall(usize),

    #[error("field lives on a different grid (expected n={expected_dim} N={expected_res}, got n={got_dim} N={got_res})")]
    GridMismatch {
        expected_dim: usize,
        expected_res: usize,
        got_dim: usize,
        got_res: usize,
    },

    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("support function is not positive (min h = {min_h:e} at node {node})")]
    NonPositiveSupport { min_h: f64, node: usize },

    #[error("body is not uniformly convex (convexity margin {margin:e} at node {node})")]
    NotConvex { margin: f64, node: usize },

    #[error("operation requires n = 2, got n = {0}")]
    RequiresPlane(usize),

    #[error("phi evaluation failed at t = {t}: {reason}")]
    PhiEvaluation { t: f64, reason: String },

    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureFailed { a: f64, b: f64 },

    #[error("density g must be strictly positive (found {value:e} at {location})")]
    NonPositiveDensity { value: f64, location: String },

    #[error("time step underflow: dt = {dt:e} fell below dt_min = {dt_min:e}")]
    DtUnderflow { dt: f64, dt_min: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
