use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VideoSpec {
    pub n_chunks: usize,
    pub chunk_duration_s: f64,
    /// Strictly ascending, Mbps.
    pub bitrate_ladder_mbps: Vec<f64>,
}

impl Default for VideoSpec {
    fn default() -> Self {
        Self {
            n_chunks: 49,
            chunk_duration_s: 2.0,
            bitrate_ladder_mbps: vec![0.3, 1.2, 2.85],
        }
    }
}

impl VideoSpec {
    /// Six-rung ladder, 0.3 to 4.3 Mbps.
    pub fn extended() -> Self {
        Self {
            bitrate_ladder_mbps: vec![0.3, 0.75, 1.2, 1.85, 2.85, 4.3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chunks == 0 {
            return Err(Error::InvalidConfig("n_chunks must be at least 1".into()));
        }
        if !(self.chunk_duration_s > 0.0) {
            return Err(Error::InvalidConfig("chunk_duration_s must be positive".into()));
        }
        let ladder = &self.bitrate_ladder_mbps;
        if ladder.is_empty() || !(ladder[0] > 0.0) || ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "bitrate ladder must be non-empty, positive and strictly ascending".into(),
            ));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.bitrate_ladder_mbps.len()
    }

    pub fn bitrate(&self, idx: usize) -> f64 {
        self.bitrate_ladder_mbps[idx]
    }

    /// Megabits in one chunk at ladder index `idx`.
    pub fn chunk_bits(&self, idx: usize) -> f64 {
        self.bitrate_ladder_mbps[idx] * self.chunk_duration_s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Quality weight.
    pub mu1: f64,
    /// Rebuffer weight, per second of stall.
    pub mu2: f64,
    /// Smoothness weight.
    pub mu3: f64,
    pub rtt_s: f64,
    pub handoff_delay_s: f64,
    pub max_buffer_s: f64,
    /// Time granularity of the DP planners.
    pub dt_s: f64,
    /// Probes of a satellite report its mean rate over this trailing
    /// window; zero reads the instantaneous sample.
    pub probe_window_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mu1: 1.0,
            mu2: 4.3,
            mu3: 1.0,
            rtt_s: 0.08,
            handoff_delay_s: 0.2,
            max_buffer_s: 60.0,
            dt_s: 1.0,
            probe_window_s: 2.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.mu1,
            self.mu2,
            self.mu3,
            self.rtt_s,
            self.handoff_delay_s,
            self.max_buffer_s,
            self.probe_window_s,
        ];
        if fields.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidConfig("simulation parameters must be non-negative".into()));
        }
        if !(self.dt_s > 0.0) {
            return Err(Error::InvalidConfig("dt_s must be positive".into()));
        }
        Ok(())
    }
}
