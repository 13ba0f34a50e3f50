use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration: non-prime in a place set, bad modulus, bad
    /// parameter range.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A loop bound, table range or integer width would be exceeded.
    #[error("range error: {0}")]
    Range(String),

    /// A least-squares fit was asked for with too few usable points.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The region kind is not supported by the requested operation.
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    /// A brute-force oracle refused to run because its loop would be too large.
    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    /// The numerical covolume cross-check disagreed with the analytic constant.
    #[error("calibration failed: count/volume ratio {ratio:.4} outside [{lo}, {hi}]")]
    CalibrationFailed { ratio: f64, lo: f64, hi: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
