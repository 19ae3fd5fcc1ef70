use serde::{Deserialize, Serialize};

use super::{chunk_qoe, download_time, quality, SimConfig, VideoSpec};
use crate::trace::{SatId, TraceSet};
use crate::{Error, Result};

/// One client's playback state between chunk downloads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    /// Next chunk to download.
    pub chunk_index: usize,
    pub wallclock_s: f64,
    pub buffer_s: f64,
    pub last_bitrate_idx: usize,
    pub current_satellite: SatId,
    /// Satellite served before the most recent handoff.
    pub previous_satellite: Option<SatId>,
    pub rebuffer_total_s: f64,
    pub handoff_count: usize,
}

impl PlayerState {
    /// Empty buffer, lowest bitrate, attached to the best satellite at t=0.
    pub fn initial(trace: &TraceSet) -> Result<Self> {
        let sat = trace
            .best_visible(0.0)
            .ok_or(Error::NoVisibleSatellite { t: 0.0 })?;
        Ok(Self::starting_on(sat))
    }

    pub fn starting_on(sat: SatId) -> Self {
        Self {
            chunk_index: 0,
            wallclock_s: 0.0,
            buffer_s: 0.0,
            last_bitrate_idx: 0,
            current_satellite: sat,
            previous_satellite: None,
            rebuffer_total_s: 0.0,
            handoff_count: 0,
        }
    }
}

/// Per-chunk action chosen by a controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub bitrate_idx: usize,
    pub target_satellite: SatId,
    pub handoff_now: bool,
}

impl Decision {
    pub fn stay(state: &PlayerState, bitrate_idx: usize) -> Self {
        Self {
            bitrate_idx,
            target_satellite: state.current_satellite,
            handoff_now: false,
        }
    }

    pub fn to(state: &PlayerState, bitrate_idx: usize, target: SatId) -> Self {
        Self {
            bitrate_idx,
            target_satellite: target,
            handoff_now: target != state.current_satellite,
        }
    }

    pub fn performs_handoff(&self, state: &PlayerState) -> bool {
        self.handoff_now || self.target_satellite != state.current_satellite
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkOutcome {
    pub chunk_index: usize,
    /// Wallclock at the request.
    pub start_s: f64,
    pub bitrate_idx: usize,
    pub bitrate_mbps: f64,
    pub satellite: SatId,
    /// Request to last bit, RTT included, handoff delay excluded.
    pub download_time_s: f64,
    /// Handoff delay plus download time.
    pub wait_s: f64,
    pub rebuffer_s: f64,
    /// Idle time spent waiting for the buffer to drop below its cap.
    pub drain_s: f64,
    pub buffer_after_s: f64,
    pub handoff_performed: bool,
    /// Goodput of the transfer phase.
    pub throughput_mbps: f64,
    pub qoe_quality: f64,
    pub qoe_rebuf_penalty: f64,
    pub qoe_smooth_penalty: f64,
}

impl ChunkOutcome {
    pub fn qoe(&self) -> f64 {
        self.qoe_quality - self.qoe_rebuf_penalty - self.qoe_smooth_penalty
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BufferStep {
    pub rebuffer_s: f64,
    pub buffer_s: f64,
    pub drain_s: f64,
}

/// Buffer update for one chunk that took `wait` seconds to arrive.
pub fn buffer_step(buffer: f64, wait: f64, chunk_duration: f64, max_buffer: f64) -> BufferStep {
    let rebuffer_s = (wait - buffer).max(0.0);
    let mut buffer_s = (buffer - wait).max(0.0) + chunk_duration;
    let mut drain_s = 0.0;
    if buffer_s > max_buffer {
        drain_s = buffer_s - max_buffer;
        buffer_s = max_buffer;
    }
    BufferStep {
        rebuffer_s,
        buffer_s,
        drain_s,
    }
}

/// Applies a completed download to `state`. `download_s` runs from the
/// request (after any handoff delay) to the last bit.
pub fn apply_chunk(
    state: &PlayerState,
    d: &Decision,
    delay_s: f64,
    download_s: f64,
    video: &VideoSpec,
    cfg: &SimConfig,
) -> (PlayerState, ChunkOutcome) {
    let handoff = d.performs_handoff(state);
    let wait = delay_s + download_s;
    let step = buffer_step(state.buffer_s, wait, video.chunk_duration_s, cfg.max_buffer_s);
    let rate = video.bitrate(d.bitrate_idx);
    let q = quality(rate);
    let smooth = if state.chunk_index == 0 {
        0.0
    } else {
        cfg.mu3 * (q - quality(video.bitrate(state.last_bitrate_idx))).abs()
    };
    let transfer = download_s - cfg.rtt_s;
    let bits = video.chunk_bits(d.bitrate_idx);
    let outcome = ChunkOutcome {
        chunk_index: state.chunk_index,
        start_s: state.wallclock_s,
        bitrate_idx: d.bitrate_idx,
        bitrate_mbps: rate,
        satellite: d.target_satellite,
        download_time_s: download_s,
        wait_s: wait,
        rebuffer_s: step.rebuffer_s,
        drain_s: step.drain_s,
        buffer_after_s: step.buffer_s,
        handoff_performed: handoff,
        throughput_mbps: if transfer > 0.0 { bits / transfer } else { f64::INFINITY },
        qoe_quality: cfg.mu1 * q,
        qoe_rebuf_penalty: cfg.mu2 * step.rebuffer_s,
        qoe_smooth_penalty: smooth,
    };
    debug_assert!(
        state.chunk_index == 0
            || (outcome.qoe()
                - chunk_qoe(video.bitrate(state.last_bitrate_idx), rate, step.rebuffer_s, cfg))
            .abs()
                < 1e-9
    );
    let next = PlayerState {
        chunk_index: state.chunk_index + 1,
        wallclock_s: state.wallclock_s + wait + step.drain_s,
        buffer_s: step.buffer_s,
        last_bitrate_idx: d.bitrate_idx,
        current_satellite: d.target_satellite,
        previous_satellite: if d.target_satellite != state.current_satellite {
            Some(state.current_satellite)
        } else {
            state.previous_satellite
        },
        rebuffer_total_s: state.rebuffer_total_s + step.rebuffer_s,
        handoff_count: state.handoff_count + handoff as usize,
    };
    (next, outcome)
}

/// Downloads the next chunk under decision `d`.
pub fn step_chunk(
    state: &PlayerState,
    d: &Decision,
    trace: &TraceSet,
    video: &VideoSpec,
    cfg: &SimConfig,
) -> Result<(PlayerState, ChunkOutcome)> {
    if state.chunk_index >= video.n_chunks {
        return Err(Error::InvalidConfig(format!(
            "chunk {} is past the end of a {}-chunk video",
            state.chunk_index, video.n_chunks
        )));
    }
    if d.bitrate_idx >= video.levels() {
        return Err(Error::InvalidConfig(format!(
            "bitrate index {} outside a {}-level ladder",
            d.bitrate_idx,
            video.levels()
        )));
    }
    let delay = if d.performs_handoff(state) {
        cfg.handoff_delay_s
    } else {
        0.0
    };
    let start = state.wallclock_s + delay;
    let dl = download_time(
        trace,
        d.target_satellite,
        start,
        video.chunk_bits(d.bitrate_idx),
        cfg,
    )?;
    Ok(apply_chunk(state, d, delay, dl, video, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(rate: f64) -> TraceSet {
        TraceSet::from_series(1.0, vec![vec![rate; 300], vec![rate; 300]]).unwrap()
    }

    fn state(buffer: f64) -> PlayerState {
        PlayerState {
            chunk_index: 3,
            wallclock_s: 10.0,
            buffer_s: buffer,
            last_bitrate_idx: 2,
            ..PlayerState::starting_on(SatId(0))
        }
    }

    #[test]
    fn healthy_buffer_absorbs_wait() {
        let s = state(8.0);
        let d = Decision::stay(&s, 2);
        let (next, out) = step_chunk(&s, &d, &flat(10.0), &VideoSpec::default(), &SimConfig::default()).unwrap();
        assert_eq!(out.rebuffer_s, 0.0);
        assert!((next.buffer_s - 9.35).abs() < 1e-12);
        assert!((next.wallclock_s - 10.65).abs() < 1e-12);
    }

    #[test]
    fn nearly_empty_buffer_stalls() {
        let s = state(0.1);
        let d = Decision::stay(&s, 2);
        let (next, out) = step_chunk(&s, &d, &flat(10.0), &VideoSpec::default(), &SimConfig::default()).unwrap();
        assert!((out.rebuffer_s - 0.55).abs() < 1e-12);
        assert_eq!(next.buffer_s, 2.0);
    }

    #[test]
    fn handoff_adds_delay() {
        let s = state(8.0);
        let cfg = SimConfig::default();
        let (_, stay) = step_chunk(&s, &Decision::stay(&s, 2), &flat(10.0), &VideoSpec::default(), &cfg).unwrap();
        let d = Decision::to(&s, 2, SatId(1));
        let (next, moved) = step_chunk(&s, &d, &flat(10.0), &VideoSpec::default(), &cfg).unwrap();
        assert!((moved.wait_s - stay.wait_s - 0.2).abs() < 1e-12);
        assert_eq!(moved.rebuffer_s, 0.0);
        assert!(moved.handoff_performed);
        assert_eq!(next.current_satellite, SatId(1));
        assert_eq!(next.previous_satellite, Some(SatId(0)));
        assert_eq!(next.handoff_count, 1);
    }

    #[test]
    fn buffer_cap_drains_into_wallclock() {
        let s = state(59.5);
        let cfg = SimConfig::default();
        let (next, out) = step_chunk(&s, &Decision::stay(&s, 2), &flat(10.0), &VideoSpec::default(), &cfg).unwrap();
        assert_eq!(next.buffer_s, 60.0);
        assert!((out.drain_s - 0.85).abs() < 1e-12);
        assert!((next.wallclock_s - (10.0 + 0.65 + 0.85)).abs() < 1e-12);
    }

    #[test]
    fn first_chunk_has_no_smoothness() {
        let s = PlayerState::starting_on(SatId(0));
        let (_, out) = step_chunk(&s, &Decision::stay(&s, 2), &flat(10.0), &VideoSpec::default(), &SimConfig::default()).unwrap();
        assert_eq!(out.qoe_smooth_penalty, 0.0);
    }

    #[test]
    fn rejects_bad_decisions() {
        let s = state(1.0);
        let v = VideoSpec::default();
        let cfg = SimConfig::default();
        assert!(step_chunk(&s, &Decision::stay(&s, 7), &flat(1.0), &v, &cfg).is_err());
        let done = PlayerState { chunk_index: 49, ..s.clone() };
        assert!(step_chunk(&done, &Decision::stay(&done, 0), &flat(1.0), &v, &cfg).is_err());
        let d = Decision::to(&s, 0, SatId(5));
        assert!(matches!(step_chunk(&s, &d, &flat(1.0), &v, &cfg), Err(Error::UnknownSatellite(_))));
    }
}
