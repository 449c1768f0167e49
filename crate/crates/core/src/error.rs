use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or configuration value failed validation. `key` names the
    /// offending field.
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("drive variant `{0}` has no bounded envelope")]
    UnsupportedDrive(&'static str),

    #[error("envelope value c = {0} lies outside [-1, 1]")]
    Domain(f64),

    #[error("fold point undefined at c = {c}: r(c) = {r} <= 0")]
    FoldUndefined { c: f64, r: f64 },

    #[error("cubic coordinate undefined at v = {0} (origin or v = 0 axis)")]
    UndefinedCoordinate(f64),

    #[error("point ({v}, {w}) with c = {c} is within the fold tolerance of J_m")]
    NearFold { v: f64, w: f64, c: f64 },

    #[error("escaping condition evaluated at the boundary c = {0}")]
    Boundary(f64),

    #[error("parameters are outside the required region: {0}")]
    RegionPrecondition(String),

    #[error("invalid start point: {0}")]
    InvalidStart(String),

    #[error(
        "trajectory diverged at t = {t} (last finite state v = {v}, w = {w}); \
         solutions are bounded, so tighten the integrator tolerances or reduce dt"
    )]
    Divergence { t: f64, v: f64, w: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
