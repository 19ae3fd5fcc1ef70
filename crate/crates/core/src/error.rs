use std::path::PathBuf;

use crate::trace::SatId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pass schedule leaves a coverage gap starting at t={at_s:.3} s")]
    CoverageGap { at_s: f64 },

    #[error("unknown satellite {0}")]
    UnknownSatellite(SatId),

    #[error("time {t:.3} s is outside the trace ({duration:.3} s)")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("download on {sat} starting at t={start_s:.3} s never completes")]
    UnboundedDownload { sat: SatId, start_s: f64 },

    #[error("no visible satellite at t={t:.3} s")]
    NoVisibleSatellite { t: f64 },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("malformed trace: {0}")]
    Structure(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("chunk index gap: expected {expected}, found {found}")]
    ChunkGap { expected: usize, found: usize },

    #[error("{users} users exceed the centralized planner cap of {cap}")]
    TooManyUsers { users: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
