use serde::{Deserialize, Serialize};

use super::{SatId, TraceSet};
use crate::{Error, Result};

/// Rate a satellite collapses to while obstructed.
pub const OBSTRUCTED_RATE_MBPS: f64 = 0.1;
/// Windows at least this long count as obstruction periods.
pub const OBSTRUCTION_MIN_DURATION_S: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionWindow {
    pub sat: SatId,
    pub start_s: f64,
    pub end_s: f64,
    pub obstruction_period: bool,
}

/// Clamps each listed satellite to [`OBSTRUCTED_RATE_MBPS`] on the samples
/// whose start time falls in `[start_s, end_s)`.
pub fn inject_obstructions(trace: &TraceSet, windows: &[(SatId, f64, f64)]) -> Result<TraceSet> {
    let mut out = trace.clone();
    let duration = trace.duration();
    for &(sat, start, end) in windows {
        if !(start >= 0.0) || end > duration {
            return Err(Error::TimeOutOfRange {
                t: if start < 0.0 { start } else { end },
                duration,
            });
        }
        if !(end > start) {
            return Err(Error::InvalidConfig(format!(
                "obstruction window [{start}, {end}) is empty"
            )));
        }
        let dt = out.sample_dt;
        let s = &mut out.satellite_mut(sat)?.samples;
        for (i, tp) in s.throughput_mbps.iter_mut().enumerate() {
            let t = i as f64 * dt;
            if t >= start && t < end {
                *tp = tp.min(OBSTRUCTED_RATE_MBPS);
            }
        }
        out.meta.obstructions.push(ObstructionWindow {
            sat,
            start_s: start,
            end_s: end,
            obstruction_period: end - start >= OBSTRUCTION_MIN_DURATION_S,
        });
    }
    Ok(out)
}

/// Runs of visible samples below the satellite's 25th-percentile rate that
/// last longer than [`OBSTRUCTION_MIN_DURATION_S`], as `(start, end)` times.
pub fn detect_obstruction_periods(trace: &TraceSet, sat: SatId) -> Result<Vec<(f64, f64)>> {
    let s = &trace.satellite(sat)?.samples;
    let mut visible: Vec<f64> = s
        .throughput_mbps
        .iter()
        .zip(&s.visible)
        .filter(|(_, v)| **v)
        .map(|(tp, _)| *tp)
        .collect();
    if visible.is_empty() {
        return Ok(Vec::new());
    }
    visible.sort_by(f64::total_cmp);
    let threshold = visible[(visible.len() - 1) / 4];

    let dt = trace.sample_dt;
    let mut periods = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=s.len() {
        let low = i < s.len() && s.visible[i] && s.throughput_mbps[i] < threshold;
        match (low, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(r)) => {
                if (i - r) as f64 * dt > OBSTRUCTION_MIN_DURATION_S {
                    periods.push((r as f64 * dt, i as f64 * dt));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    Ok(periods)
}
