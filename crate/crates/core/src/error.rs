use std::path::PathBuf;

/// Errors raised by the simulation and estimation toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no front: {0}")]
    NoFront(String),

    #[error("time step {dt} violates the CFL bound; admissible dt <= {admissible}")]
    CflViolation { dt: f64, admissible: f64 },

    #[error("non-finite level-set value at cell ({i}, {j}) at t = {time}")]
    NonFinite { i: usize, j: usize, time: f64 },

    #[error("snapshot mismatch: {0}")]
    SnapshotMismatch(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("raster format error in {path}: {reason}")]
    Raster { path: PathBuf, reason: String },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::CflViolation { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
