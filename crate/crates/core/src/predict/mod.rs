//! Future-throughput estimators feeding the planners.

mod forecast;
mod history;
mod robust;

use serde::{Deserialize, Serialize};

pub use forecast::{oracle_predict, Forecast, Forecaster};
pub use history::{ErrorTracker, ThroughputHistory, DEFAULT_WINDOW};
pub use robust::{harmonic_mean, observe, robust_predict, SatPredictor, ZERO_FLOOR_MBPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    /// Harmonic mean divided by one plus the worst recent relative error.
    Robust,
    /// True future throughput read from the trace.
    Oracle,
}

impl PredictorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictorKind::Robust => "robust",
            PredictorKind::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for PredictorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "robust" => Ok(Self::Robust),
            "oracle" => Ok(Self::Oracle),
            other => Err(format!("unknown predictor `{other}` (expected robust or oracle)")),
        }
    }
}
