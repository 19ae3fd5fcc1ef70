use serde::{Deserialize, Serialize};

use super::{ErrorTracker, ThroughputHistory};
use crate::{Error, Result};

/// Observations are floored here so the harmonic mean stays defined.
pub const ZERO_FLOOR_MBPS: f64 = 0.01;

pub fn harmonic_mean(history: &ThroughputHistory) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::Empty("throughput history"));
    }
    let inv: f64 = history.values().map(|c| 1.0 / c.max(ZERO_FLOOR_MBPS)).sum();
    Ok(history.len() as f64 / inv)
}

/// Harmonic mean discounted by the worst recent relative error.
pub fn robust_predict(history: &ThroughputHistory, errors: &ErrorTracker) -> Result<f64> {
    Ok(harmonic_mean(history)? / (1.0 + errors.max()))
}

/// Records the realized throughput and its relative error against the
/// prediction made for it.
pub fn observe(
    history: &mut ThroughputHistory,
    errors: &mut ErrorTracker,
    t: f64,
    predicted: f64,
    actual: f64,
) {
    let denom = actual.max(ZERO_FLOOR_MBPS);
    errors.push((predicted - actual).abs() / denom);
    history.push(t, actual);
}

/// Robust predictor state of one satellite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SatPredictor {
    pub history: ThroughputHistory,
    pub errors: ErrorTracker,
    /// Latest prediction not yet checked against an observation.
    pending: Option<f64>,
}

impl SatPredictor {
    pub fn new(window: usize) -> Self {
        Self {
            history: ThroughputHistory::new(window),
            errors: ErrorTracker::new(window),
            pending: None,
        }
    }

    pub fn observe(&mut self, t: f64, actual: f64) {
        match self.pending.take() {
            Some(p) => observe(&mut self.history, &mut self.errors, t, p, actual),
            None => self.history.push(t, actual),
        }
    }

    /// Robust estimate, remembered for error tracking.
    pub fn predict(&mut self) -> Result<f64> {
        let p = robust_predict(&self.history, &self.errors)?;
        self.pending = Some(p);
        Ok(p)
    }

    /// Robust estimate without touching error tracking.
    pub fn peek(&self) -> Result<f64> {
        robust_predict(&self.history, &self.errors)
    }
}
