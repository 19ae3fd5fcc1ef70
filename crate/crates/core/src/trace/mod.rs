//! Multi-satellite throughput traces: the ground truth every simulation
//! integrates against.

mod generate;
mod geometry;
mod io;
mod obstruction;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use generate::{gen_trace_set, TraceGenConfig};
pub use geometry::{free_space_throughput, slant_range, PassGeometry};
pub use io::{metadata_path, read_trace, write_trace};
pub use obstruction::{
    detect_obstruction_periods, inject_obstructions, ObstructionWindow, OBSTRUCTED_RATE_MBPS,
    OBSTRUCTION_MIN_DURATION_S,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SatId(pub u32);

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sat{}", self.0)
    }
}

/// Per-sample series of one satellite. Sample `i` covers
/// `[i * dt, (i + 1) * dt)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub throughput_mbps: Vec<f64>,
    pub elevation_deg: Vec<f64>,
    pub visible: Vec<bool>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.throughput_mbps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.throughput_mbps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatelliteTrace {
    pub id: SatId,
    pub passes: Vec<PassGeometry>,
    pub samples: Samples,
}

/// Provenance carried in the metadata sidecar.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config: Option<TraceGenConfig>,
    pub min_elevation_deg: Option<f64>,
    pub obstructions: Vec<ObstructionWindow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    pub sample_dt: f64,
    /// Sorted by id; all share the same time axis.
    pub satellites: Vec<SatelliteTrace>,
    pub meta: TraceMeta,
}

/// Index of the grid cell `[k * dt, (k + 1) * dt)` containing `t`, robust to
/// rounding in `t / dt`.
pub fn grid_index(t: f64, dt: f64) -> usize {
    if t <= 0.0 {
        return 0;
    }
    // boundaries within this slack of t count as reached
    let slack = dt * 1e-9;
    let mut k = (t / dt).floor();
    while (k + 1.0) * dt <= t + slack {
        k += 1.0;
    }
    while k > 0.0 && k * dt > t + slack {
        k -= 1.0;
    }
    k as usize
}

impl TraceSet {
    /// Builds a trace from per-satellite series and checks its invariants.
    pub fn new(sample_dt: f64, satellites: Vec<SatelliteTrace>, meta: TraceMeta) -> Result<Self> {
        let trace = Self {
            sample_dt,
            satellites,
            meta,
        };
        trace.validate()?;
        Ok(trace)
    }

    /// Hand-built trace of flat or stepped series; every sample with
    /// positive throughput is visible. Elevation is fixed at 90 degrees.
    pub fn from_series(sample_dt: f64, series: Vec<Vec<f64>>) -> Result<Self> {
        let satellites = series
            .into_iter()
            .enumerate()
            .map(|(i, tp)| {
                let n = tp.len();
                let visible = tp.iter().map(|&x| x > 0.0).collect();
                SatelliteTrace {
                    id: SatId(i as u32),
                    passes: Vec::new(),
                    samples: Samples {
                        throughput_mbps: tp,
                        elevation_deg: vec![90.0; n],
                        visible,
                    },
                }
            })
            .collect();
        Self::new(sample_dt, satellites, TraceMeta::default())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_dt > 0.0) {
            return Err(Error::Structure("sample_dt must be positive".into()));
        }
        let Some(first) = self.satellites.first() else {
            return Err(Error::Structure("trace has no satellites".into()));
        };
        let n = first.samples.len();
        if n == 0 {
            return Err(Error::Structure("trace has no samples".into()));
        }
        for w in self.satellites.windows(2) {
            if w[0].id >= w[1].id {
                return Err(Error::Structure(format!(
                    "satellite ids must be unique and ascending ({} then {})",
                    w[0].id, w[1].id
                )));
            }
        }
        let mask = self.meta.min_elevation_deg;
        for sat in &self.satellites {
            let s = &sat.samples;
            if s.throughput_mbps.len() != n || s.elevation_deg.len() != n || s.visible.len() != n {
                return Err(Error::Structure(format!(
                    "{} has {} samples, expected {n} (time axes differ)",
                    sat.id,
                    s.throughput_mbps.len()
                )));
            }
            for i in 0..n {
                let tp = s.throughput_mbps[i];
                if !(tp >= 0.0) || !tp.is_finite() {
                    return Err(Error::Structure(format!(
                        "{} sample {i}: throughput {tp} is negative or not finite",
                        sat.id
                    )));
                }
                if !s.visible[i] && tp != 0.0 {
                    return Err(Error::Structure(format!(
                        "{} sample {i}: throughput {tp} on an invisible sample",
                        sat.id
                    )));
                }
                if let Some(mask) = mask {
                    if s.visible[i] && s.elevation_deg[i] < mask {
                        return Err(Error::Structure(format!(
                            "{} sample {i}: visible below the {mask} degree mask",
                            sat.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.satellites[0].samples.len()
    }

    pub fn duration(&self) -> f64 {
        self.n_samples() as f64 * self.sample_dt
    }

    pub fn sat_ids(&self) -> impl Iterator<Item = SatId> + '_ {
        self.satellites.iter().map(|s| s.id)
    }

    pub fn satellite(&self, id: SatId) -> Result<&SatelliteTrace> {
        self.satellites
            .binary_search_by_key(&id, |s| s.id)
            .map(|i| &self.satellites[i])
            .map_err(|_| Error::UnknownSatellite(id))
    }

    pub(crate) fn satellite_mut(&mut self, id: SatId) -> Result<&mut SatelliteTrace> {
        match self.satellites.binary_search_by_key(&id, |s| s.id) {
            Ok(i) => Ok(&mut self.satellites[i]),
            Err(_) => Err(Error::UnknownSatellite(id)),
        }
    }

    /// Sample containing `t`, clamped to the last sample past the end.
    pub fn sample_index(&self, t: f64) -> usize {
        grid_index(t, self.sample_dt).min(self.n_samples() - 1)
    }

    fn checked_index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t >= self.duration() {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration(),
            });
        }
        Ok(self.sample_index(t))
    }

    /// Ids visible at `t`, ascending.
    pub fn visible_satellites(&self, t: f64) -> Result<Vec<SatId>> {
        let i = self.checked_index(t)?;
        Ok(self
            .satellites
            .iter()
            .filter(|s| s.samples.visible[i])
            .map(|s| s.id)
            .collect())
    }

    /// Like [`visible_satellites`](Self::visible_satellites) but clamps `t`
    /// past the end to the final sample.
    pub fn visible_at_or_last(&self, t: f64) -> Vec<SatId> {
        let i = self.sample_index(t);
        self.satellites
            .iter()
            .filter(|s| s.samples.visible[i])
            .map(|s| s.id)
            .collect()
    }

    pub fn is_visible(&self, sat: SatId, t: f64) -> bool {
        let i = self.sample_index(t);
        self.satellite(sat).map(|s| s.samples.visible[i]).unwrap_or(false)
    }

    /// Throughput of the sample containing `t` (last sample past the end).
    pub fn throughput_at(&self, sat: SatId, t: f64) -> Result<f64> {
        let i = self.sample_index(t);
        Ok(self.satellite(sat)?.samples.throughput_mbps[i])
    }

    /// Time-averaged throughput over `[t - window, t]`, clipped at 0; the
    /// sample at `t` when the window is empty.
    pub fn mean_throughput(&self, sat: SatId, t: f64, window: f64) -> Result<f64> {
        let tp = &self.satellite(sat)?.samples.throughput_mbps;
        let from = (t - window).max(0.0);
        if !(t > from) {
            return Ok(tp[self.sample_index(t)]);
        }
        let mut acc = 0.0;
        let mut x = from;
        while x < t {
            let k = grid_index(x, self.sample_dt);
            let end = ((k + 1) as f64 * self.sample_dt).min(t);
            acc += tp[k.min(tp.len() - 1)] * (end - x);
            x = end;
        }
        Ok(acc / (t - from))
    }

    pub fn elevation_at(&self, sat: SatId, t: f64) -> Result<f64> {
        let i = self.sample_index(t);
        Ok(self.satellite(sat)?.samples.elevation_deg[i])
    }

    /// Start time of the first invisible sample at or after `t`, or `None`
    /// when the satellite stays visible to the end of the trace.
    pub fn visible_until(&self, sat: SatId, t: f64) -> Result<Option<f64>> {
        let s = &self.satellite(sat)?.samples;
        let i = self.sample_index(t);
        Ok(s.visible[i..]
            .iter()
            .position(|v| !v)
            .map(|off| (i + off) as f64 * self.sample_dt))
    }

    /// Visible time left for `sat` from `t`; infinite when it stays visible
    /// through the end of the trace.
    pub fn remaining_visible(&self, sat: SatId, t: f64) -> Result<f64> {
        Ok(match self.visible_until(sat, t)? {
            Some(end) => (end - t).max(0.0),
            None => f64::INFINITY,
        })
    }

    /// Highest-throughput visible satellite at `t`, ties to the lower id.
    pub fn best_visible(&self, t: f64) -> Option<SatId> {
        let i = self.sample_index(t);
        let mut best: Option<(SatId, f64)> = None;
        for s in &self.satellites {
            if !s.samples.visible[i] {
                continue;
            }
            let tp = s.samples.throughput_mbps[i];
            if best.is_none_or(|(_, b)| tp > b) {
                best = Some((s.id, tp));
            }
        }
        best.map(|(id, _)| id)
    }
}
