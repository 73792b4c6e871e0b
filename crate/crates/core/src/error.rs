use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum TopoError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate geometry: linked nodes {0} and {1} are coincident")]
    DegenerateGeometry(usize, usize),

    #[error("calibration failed: no sweep point reached connectivity {threshold}")]
    CalibrationFailure { threshold: f64 },

    #[error("calibration table not found at {0}; run `topoctl calibrate` first")]
    MissingTable(PathBuf),

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl TopoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TopoError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = TopoError> = std::result::Result<T, E>;
