use serde::Serialize;

use super::{
    baseline_handoff, exhaustive_search, joint_mpc_decide, select_candidates, BaselineStrategy,
    CandidateMode, InnerSearch, JointProblem, PlanInstance,
};
use crate::predict::{Forecaster, PredictorKind};
use crate::sim::{ChunkOutcome, Controller, Decision, DecisionContext};
use crate::trace::SatId;
use crate::Result;

pub const DEFAULT_HORIZON: usize = 5;

/// Satellite with the highest probed rate; ties to the lower id.
fn fastest(ctx: &DecisionContext<'_>) -> SatId {
    let mut best: Option<(SatId, f64)> = None;
    for &(s, r) in ctx.probes {
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((s, r));
        }
    }
    best.map_or(ctx.state.current_satellite, |(s, _)| s)
}

/// One evaluated option, tagged with the decision it belonged to.
#[derive(Clone, Debug, Serialize)]
pub struct CandidateDump {
    pub chunk_index: usize,
    pub wallclock_s: f64,
    pub satellite: SatId,
    pub handoff_at: Option<usize>,
    pub best_qoe: f64,
    pub first_bitrate_idx: usize,
    pub chosen: bool,
}

/// Joint satellite and bitrate MPC (DualMPC or ManifoldMPC).
pub struct JointController {
    pub mode: CandidateMode,
    pub horizon: usize,
    pub search: InnerSearch,
    forecaster: Forecaster,
    /// Per-decision option tables, when enabled.
    pub dump: Option<Vec<CandidateDump>>,
}

impl JointController {
    pub fn new(mode: CandidateMode, predictor: PredictorKind) -> Self {
        Self {
            mode,
            horizon: DEFAULT_HORIZON,
            search: InnerSearch::default(),
            forecaster: Forecaster::new(predictor),
            dump: None,
        }
    }

    pub fn with_search(mut self, horizon: usize, search: InnerSearch) -> Self {
        self.horizon = horizon;
        self.search = search;
        self
    }

    pub fn with_dump(mut self) -> Self {
        self.dump = Some(Vec::new());
        self
    }
}

impl Controller for JointController {
    fn name(&self) -> String {
        format!("joint-{}", self.mode.as_str())
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        self.forecaster.ingest_probes(ctx);
        let state = ctx.state;
        let visible: Vec<SatId> = ctx.visible().collect();
        let ids = select_candidates(
            self.mode,
            &visible,
            |s| self.forecaster.predicted_rate(ctx, s),
            state.current_satellite,
            state.previous_satellite,
        );
        let current = self.forecaster.forecast(ctx, state.current_satellite)?;
        let mut candidates = Vec::with_capacity(ids.len());
        for s in ids {
            candidates.push((s, self.forecaster.forecast(ctx, s)?));
        }
        let res = joint_mpc_decide(&JointProblem {
            state,
            current: &current,
            candidates: &candidates,
            horizon: self.horizon,
            search: self.search,
            video: ctx.video,
            cfg: ctx.cfg,
            fallback: fastest(ctx),
        });
        if let Some(dump) = self.dump.as_mut() {
            for row in &res.table {
                dump.push(CandidateDump {
                    chunk_index: state.chunk_index,
                    wallclock_s: state.wallclock_s,
                    satellite: row.satellite,
                    handoff_at: row.handoff_at,
                    best_qoe: row.best_qoe,
                    first_bitrate_idx: row.first_bitrate_idx,
                    chosen: *row == res.best,
                });
            }
        }
        Ok(res.decision)
    }

    fn on_chunk(&mut self, outcome: &ChunkOutcome) {
        self.forecaster.ingest_chunk(outcome);
    }
}

/// A handoff rule paired with an independent single-satellite MPC for the
/// bitrate. Without a rule the client stays put unless its satellite sets.
pub struct SeparateController {
    pub strategy: Option<BaselineStrategy>,
    pub horizon: usize,
    forecaster: Forecaster,
}

impl SeparateController {
    pub fn new(strategy: Option<BaselineStrategy>, predictor: PredictorKind) -> Self {
        Self {
            strategy,
            horizon: DEFAULT_HORIZON,
            forecaster: Forecaster::new(predictor),
        }
    }
}

impl Controller for SeparateController {
    fn name(&self) -> String {
        match self.strategy {
            Some(s) => format!("separate-{}", s.as_str()),
            None => "robust-mpc".into(),
        }
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        self.forecaster.ingest_probes(ctx);
        let state = ctx.state;
        let target = match self.strategy {
            Some(s) => baseline_handoff(s, ctx)?,
            None if ctx.probe(state.current_satellite).is_some() => state.current_satellite,
            None => fastest(ctx),
        };
        let forecast = self.forecaster.forecast(ctx, target)?;
        let inst = PlanInstance::from_state(state, self.horizon, &forecast, ctx.video, ctx.cfg);
        let plan = exhaustive_search(&inst);
        Ok(Decision::to(state, plan.first_bitrate_idx, target))
    }

    fn on_chunk(&mut self, outcome: &ChunkOutcome) {
        self.forecaster.ingest_chunk(outcome);
    }
}
