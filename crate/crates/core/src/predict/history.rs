use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Samples kept by default, one per video chunk.
pub const DEFAULT_WINDOW: usize = 5;

/// Recent throughput observations of one satellite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputHistory {
    capacity: usize,
    samples: VecDeque<(f64, f64)>,
}

impl Default for ThroughputHistory {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW)
    }
}

impl ThroughputHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history window must be positive");
        Self {
            capacity,
            samples: VecDeque::with_capacity(capacity),
        }
    }

    pub fn from_values(capacity: usize, values: &[f64]) -> Self {
        let mut h = Self::new(capacity);
        for (i, &v) in values.iter().enumerate() {
            h.push(i as f64, v);
        }
        h
    }

    /// Appends `(t, mbps)`, evicting the oldest sample beyond capacity.
    /// A sample not strictly after the newest one replaces it.
    pub fn push(&mut self, t: f64, mbps: f64) {
        let mbps = mbps.max(0.0);
        if let Some(last) = self.samples.back_mut() {
            if t <= last.0 {
                last.1 = mbps;
                return;
            }
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((t, mbps));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        self.samples.back().copied()
    }
}

/// Sliding window of relative prediction errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTracker {
    capacity: usize,
    errors: VecDeque<f64>,
}

impl Default for ErrorTracker {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW)
    }
}

impl ErrorTracker {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "error window must be positive");
        Self {
            capacity,
            errors: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, error: f64) {
        if self.errors.len() == self.capacity {
            self.errors.pop_front();
        }
        self.errors.push_back(error.abs());
    }

    /// Largest error in the window; zero when empty.
    pub fn max(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.errors.iter().copied()
    }
}
