//! Transfer-time integration over piecewise-constant rate curves.

use super::SimConfig;
use crate::trace::{grid_index, SatId, SatelliteTrace, TraceSet};
use crate::{Error, Result};

/// A piecewise-constant rate in Mbps.
pub trait RateCurve {
    /// Rate in effect at `t` and the time it next changes (`None` when it
    /// stays constant forever). The returned end is strictly after `t`.
    fn segment(&self, t: f64) -> (f64, Option<f64>);
}

/// One satellite of a trace. Past the last sample the final rate holds.
pub struct SatLink<'a> {
    dt: f64,
    sat: &'a SatelliteTrace,
}

impl<'a> SatLink<'a> {
    pub fn new(trace: &'a TraceSet, sat: SatId) -> Result<Self> {
        Ok(Self {
            dt: trace.sample_dt,
            sat: trace.satellite(sat)?,
        })
    }
}

impl RateCurve for SatLink<'_> {
    fn segment(&self, t: f64) -> (f64, Option<f64>) {
        let tp = &self.sat.samples.throughput_mbps;
        let k = grid_index(t, self.dt);
        if k + 1 >= tp.len() {
            (tp[tp.len() - 1], None)
        } else {
            (tp[k], Some((k + 1) as f64 * self.dt))
        }
    }
}

/// A curve with every rate multiplied by `scale`.
pub struct Scaled<'a, C: ?Sized> {
    pub inner: &'a C,
    pub scale: f64,
}

impl<C: RateCurve + ?Sized> RateCurve for Scaled<'_, C> {
    fn segment(&self, t: f64) -> (f64, Option<f64>) {
        let (r, end) = self.inner.segment(t);
        (r * self.scale, end)
    }
}

/// Absolute completion time of moving `bits` megabits starting at `from`,
/// or `None` if the curve never delivers them.
pub fn integrate_transfer<C: RateCurve + ?Sized>(curve: &C, from: f64, bits: f64) -> Option<f64> {
    if bits <= 0.0 {
        return Some(from);
    }
    let mut t = from;
    let mut remaining = bits;
    loop {
        let (rate, end) = curve.segment(t);
        match end {
            Some(end) => {
                let capacity = rate * (end - t);
                if capacity >= remaining {
                    return Some(t + remaining / rate);
                }
                remaining -= capacity;
                t = end;
            }
            None if rate > 0.0 => return Some(t + remaining / rate),
            None => return None,
        }
    }
}

/// Seconds from request at `start_t` until `chunk_bits` have arrived on
/// `sat`: one RTT, then transfer at the trace's rate.
pub fn download_time(
    trace: &TraceSet,
    sat: SatId,
    start_t: f64,
    chunk_bits: f64,
    cfg: &SimConfig,
) -> Result<f64> {
    let link = SatLink::new(trace, sat)?;
    integrate_transfer(&link, start_t + cfg.rtt_s, chunk_bits)
        .map(|end| end - start_t)
        .ok_or(Error::UnboundedDownload { sat, start_s: start_t })
}
