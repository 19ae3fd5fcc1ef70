use serde::Serialize;

use crate::predict::Forecast;
use crate::sim::{buffer_step, integrate_transfer, quality, PlayerState, Scaled, SimConfig, VideoSpec};

/// One horizon problem: the next `horizon` chunks starting from a player
/// state, optionally switching to `target` before chunk `h` (1-based).
#[derive(Clone, Copy, Debug)]
pub struct PlanInstance<'a> {
    pub horizon: usize,
    pub start_s: f64,
    pub buffer_s: f64,
    /// `None` before the first chunk of a session, which has no
    /// smoothness term.
    pub prev_bitrate_idx: Option<usize>,
    pub current: &'a Forecast,
    pub handoff: Option<(usize, &'a Forecast)>,
    /// Per-chunk fraction of the forecast this client expects to get, when
    /// the link is shared.
    pub share: Option<&'a [f64]>,
    pub video: &'a VideoSpec,
    pub cfg: &'a SimConfig,
}

impl<'a> PlanInstance<'a> {
    /// Horizon is cut short at the end of the video.
    pub fn from_state(
        state: &PlayerState,
        horizon: usize,
        current: &'a Forecast,
        video: &'a VideoSpec,
        cfg: &'a SimConfig,
    ) -> Self {
        Self {
            horizon: horizon.min(video.n_chunks.saturating_sub(state.chunk_index)),
            start_s: state.wallclock_s,
            buffer_s: state.buffer_s,
            prev_bitrate_idx: (state.chunk_index > 0).then_some(state.last_bitrate_idx),
            current,
            handoff: None,
            share: None,
            video,
            cfg,
        }
    }

    pub fn with_handoff(self, h: usize, target: &'a Forecast) -> Self {
        assert!(h >= 1 && h <= self.horizon, "handoff point {h} outside 1..={}", self.horizon);
        Self {
            handoff: Some((h, target)),
            ..self
        }
    }

    pub fn with_share(self, share: &'a [f64]) -> Self {
        assert!(share.len() >= self.horizon, "one share per horizon chunk");
        Self {
            share: Some(share),
            ..self
        }
    }

    pub fn handoff_at(&self) -> Option<usize> {
        self.handoff.map(|(h, _)| h)
    }

    /// Downloads chunk `n` (1-based) at bitrate `r`. Returns the new time,
    /// buffer and chunk QoE, or `None` if the forecast never delivers it.
    pub(crate) fn step(
        &self,
        n: usize,
        time: f64,
        buffer: f64,
        prev: Option<usize>,
        r: usize,
    ) -> Option<(f64, f64, f64)> {
        let (curve, delay) = match self.handoff {
            Some((h, target)) if n >= h => (target, if n == h { self.cfg.handoff_delay_s } else { 0.0 }),
            _ => (self.current, 0.0),
        };
        let start = time + delay;
        let bits = self.video.chunk_bits(r);
        let end = match self.share {
            Some(share) => {
                let scaled = Scaled { inner: curve, scale: share[n - 1] };
                integrate_transfer(&scaled, start + self.cfg.rtt_s, bits)?
            }
            None => integrate_transfer(curve, start + self.cfg.rtt_s, bits)?,
        };
        let wait = delay + (end - start);
        let step = buffer_step(buffer, wait, self.video.chunk_duration_s, self.cfg.max_buffer_s);
        let q = quality(self.video.bitrate(r));
        let smooth = prev.map_or(0.0, |p| {
            self.cfg.mu3 * (q - quality(self.video.bitrate(p))).abs()
        });
        let qoe = self.cfg.mu1 * q - self.cfg.mu2 * step.rebuffer_s - smooth;
        Some((time + wait + step.drain_s, step.buffer_s, qoe))
    }
}

/// Best plan found by a horizon search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanResult {
    /// `-inf` when no plan completes.
    pub best_qoe: f64,
    pub first_bitrate_idx: usize,
    pub full_bitrate_plan: Vec<usize>,
    /// Plans (exhaustive) or distinct states (DP) examined.
    pub visited: usize,
}

impl PlanResult {
    pub(crate) fn infeasible(inst: &PlanInstance<'_>, visited: usize) -> Self {
        Self {
            best_qoe: f64::NEG_INFINITY,
            first_bitrate_idx: 0,
            full_bitrate_plan: vec![0; inst.horizon],
            visited,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.best_qoe.is_finite()
    }
}

/// Horizon QoE of a fixed bitrate plan; `-inf` if some chunk never arrives.
pub fn evaluate_plan(inst: &PlanInstance<'_>, plan: &[usize]) -> f64 {
    let (mut time, mut buffer, mut prev) = (inst.start_s, inst.buffer_s, inst.prev_bitrate_idx);
    let mut total = 0.0;
    for (i, &r) in plan.iter().enumerate() {
        match inst.step(i + 1, time, buffer, prev, r) {
            Some((t, b, q)) => {
                total += q;
                time = t;
                buffer = b;
                prev = Some(r);
            }
            None => return f64::NEG_INFINITY,
        }
    }
    total
}
