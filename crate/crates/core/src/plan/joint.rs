use std::cmp::Ordering;

use serde::Serialize;

use super::{exhaustive_search, InnerSearch, PlanInstance};
use crate::predict::Forecast;
use crate::sim::{Decision, PlayerState, SimConfig, VideoSpec};
use crate::trace::SatId;

/// Inputs of one joint satellite/bitrate decision.
pub struct JointProblem<'a> {
    pub state: &'a PlayerState,
    /// Forecast for the serving satellite.
    pub current: &'a Forecast,
    pub candidates: &'a [(SatId, Forecast)],
    pub horizon: usize,
    pub search: InnerSearch,
    pub video: &'a VideoSpec,
    pub cfg: &'a SimConfig,
    /// Where to go at the lowest bitrate if no option can finish a horizon.
    pub fallback: SatId,
}

/// Best horizon plan of one (satellite, handoff point) option.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateRow {
    pub satellite: SatId,
    /// `None` for staying on the serving satellite.
    pub handoff_at: Option<usize>,
    pub best_qoe: f64,
    pub first_bitrate_idx: usize,
}

#[derive(Clone, Debug)]
pub struct JointResult {
    pub decision: Decision,
    pub best: CandidateRow,
    pub plan: Vec<usize>,
    /// Every option evaluated, staying first.
    pub table: Vec<CandidateRow>,
    pub inner_calls: usize,
}

/// Total order on options: QoE, then staying over switching, later handoff
/// over earlier, lower satellite id, higher first bitrate.
fn rank(a: &CandidateRow, b: &CandidateRow) -> Ordering {
    let qa = if a.best_qoe.is_nan() { f64::NEG_INFINITY } else { a.best_qoe };
    let qb = if b.best_qoe.is_nan() { f64::NEG_INFINITY } else { b.best_qoe };
    qa.partial_cmp(&qb)
        .unwrap_or(Ordering::Equal)
        .then_with(|| match (a.handoff_at, b.handoff_at) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(x), Some(y)) => x.cmp(&y),
        })
        .then_with(|| b.satellite.cmp(&a.satellite))
        .then_with(|| a.first_bitrate_idx.cmp(&b.first_bitrate_idx))
}

/// Plans the next horizon allowing at most one handoff, and returns the
/// binding first action. Staying is scored by exhaustive search; each
/// (candidate, handoff point) by `search`.
pub fn joint_mpc_decide(p: &JointProblem<'_>) -> JointResult {
    let base = PlanInstance::from_state(p.state, p.horizon, p.current, p.video, p.cfg);
    let cur = p.state.current_satellite;

    let stay = exhaustive_search(&base);
    let mut table = vec![CandidateRow {
        satellite: cur,
        handoff_at: None,
        best_qoe: stay.best_qoe,
        first_bitrate_idx: stay.first_bitrate_idx,
    }];
    let mut best_idx = 0;
    let mut best_plan = stay.full_bitrate_plan;
    for (sat, forecast) in p.candidates {
        for h in 1..=base.horizon {
            let res = p.search.run(&base.with_handoff(h, forecast));
            let row = CandidateRow {
                satellite: *sat,
                handoff_at: Some(h),
                best_qoe: res.best_qoe,
                first_bitrate_idx: res.first_bitrate_idx,
            };
            if rank(&row, &table[best_idx]) == Ordering::Greater {
                best_idx = table.len();
                best_plan = res.full_bitrate_plan;
            }
            table.push(row);
        }
    }
    let inner_calls = table.len();
    let best = table[best_idx].clone();

    let decision = if !best.best_qoe.is_finite() {
        Decision::to(p.state, 0, p.fallback)
    } else if best.handoff_at == Some(1) {
        Decision::to(p.state, best.first_bitrate_idx, best.satellite)
    } else {
        Decision::stay(p.state, best.first_bitrate_idx)
    };
    JointResult {
        decision,
        best,
        plan: best_plan,
        table,
        inner_calls,
    }
}
