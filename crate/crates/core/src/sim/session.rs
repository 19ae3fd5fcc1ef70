use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{session_qoe, step_chunk, ChunkOutcome, Decision, PlayerState, QoEBreakdown, SimConfig, VideoSpec};
use crate::trace::{SatId, TraceSet};
use crate::Result;

/// What a controller sees at a chunk boundary.
pub struct DecisionContext<'a> {
    pub state: &'a PlayerState,
    pub trace: &'a TraceSet,
    pub video: &'a VideoSpec,
    pub cfg: &'a SimConfig,
    /// Rate each visible satellite would give this client right now,
    /// ascending by id.
    pub probes: &'a [(SatId, f64)],
}

impl DecisionContext<'_> {
    pub fn probe(&self, sat: SatId) -> Option<f64> {
        self.probes.iter().find(|(id, _)| *id == sat).map(|(_, r)| *r)
    }

    pub fn visible(&self) -> impl Iterator<Item = SatId> + '_ {
        self.probes.iter().map(|(id, _)| *id)
    }
}

/// A per-chunk bitrate and satellite policy.
pub trait Controller {
    fn name(&self) -> String;

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision>;

    /// Called once the chunk requested by the last decision has arrived.
    fn on_chunk(&mut self, _outcome: &ChunkOutcome) {}
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        (**self).decide(ctx)
    }

    fn on_chunk(&mut self, outcome: &ChunkOutcome) {
        (**self).on_chunk(outcome)
    }
}

#[derive(Clone, Debug)]
pub struct SessionResult {
    pub controller: String,
    pub breakdown: QoEBreakdown,
    pub final_state: PlayerState,
    /// Wall time of each `decide` call.
    pub decision_latency_ms: Vec<f64>,
}

impl SessionResult {
    pub fn handoffs(&self) -> usize {
        self.final_state.handoff_count
    }

    pub fn mean_latency_ms(&self) -> f64 {
        if self.decision_latency_ms.is_empty() {
            return 0.0;
        }
        self.decision_latency_ms.iter().sum::<f64>() / self.decision_latency_ms.len() as f64
    }

    pub fn report<'a>(&'a self, video: &'a VideoSpec, cfg: &'a SimConfig) -> SessionReport<'a> {
        SessionReport {
            controller: &self.controller,
            video,
            sim: cfg,
            quality_total: self.breakdown.quality_total,
            rebuf_penalty_total: self.breakdown.rebuf_penalty_total,
            smooth_penalty_total: self.breakdown.smooth_penalty_total,
            qoe_total: self.breakdown.qoe_total,
            rebuffer_s: self.breakdown.rebuffer_s,
            handoffs: self.handoffs(),
            chunks: &self.breakdown.per_chunk,
        }
    }
}

/// Session result file layout; serialize with
/// [`to_stable_json`](crate::json::to_stable_json).
#[derive(Serialize)]
pub struct SessionReport<'a> {
    pub controller: &'a str,
    pub video: &'a VideoSpec,
    pub sim: &'a SimConfig,
    pub quality_total: f64,
    pub rebuf_penalty_total: f64,
    pub smooth_penalty_total: f64,
    pub qoe_total: f64,
    pub rebuffer_s: f64,
    pub handoffs: usize,
    pub chunks: &'a [ChunkOutcome],
}

/// Probe list for a single client: the recent mean rate of every visible
/// satellite.
pub fn single_user_probes(trace: &TraceSet, t: f64, cfg: &SimConfig) -> Vec<(SatId, f64)> {
    trace
        .visible_at_or_last(t)
        .into_iter()
        .map(|id| (id, trace.mean_throughput(id, t, cfg.probe_window_s).unwrap_or(0.0)))
        .collect()
}

/// Plays the whole video with `controller` deciding every chunk.
pub fn run_session<C: Controller + ?Sized>(
    trace: &TraceSet,
    video: &VideoSpec,
    cfg: &SimConfig,
    controller: &mut C,
) -> Result<SessionResult> {
    video.validate()?;
    cfg.validate()?;
    let mut state = PlayerState::initial(trace)?;
    let mut outcomes = Vec::with_capacity(video.n_chunks);
    let mut latency = Vec::with_capacity(video.n_chunks);
    while state.chunk_index < video.n_chunks {
        let probes = single_user_probes(trace, state.wallclock_s, cfg);
        let ctx = DecisionContext {
            state: &state,
            trace,
            video,
            cfg,
            probes: &probes,
        };
        let t0 = Instant::now();
        let d = controller.decide(&ctx)?;
        latency.push(t0.elapsed().as_secs_f64() * 1e3);
        let (next, outcome) = step_chunk(&state, &d, trace, video, cfg)?;
        controller.on_chunk(&outcome);
        outcomes.push(outcome);
        state = next;
    }
    Ok(SessionResult {
        controller: controller.name(),
        breakdown: session_qoe(&outcomes, cfg)?,
        final_state: state,
        decision_latency_ms: latency,
    })
}

/// Replays a fixed list of decisions; `(bitrate_idx, satellite)` per chunk.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ScriptedController {
    pub plan: Vec<(usize, SatId)>,
    pub forced_handoff: Vec<bool>,
}

impl ScriptedController {
    pub fn new(plan: Vec<(usize, SatId)>) -> Self {
        Self {
            plan,
            forced_handoff: Vec::new(),
        }
    }
}

impl Controller for ScriptedController {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        let k = ctx.state.chunk_index;
        let (idx, sat) = self.plan[k.min(self.plan.len() - 1)];
        let mut d = Decision::to(ctx.state, idx, sat);
        if self.forced_handoff.get(k).copied().unwrap_or(false) {
            d.handoff_now = true;
        }
        Ok(d)
    }
}
