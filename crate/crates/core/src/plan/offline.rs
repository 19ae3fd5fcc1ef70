use std::collections::HashMap;

use crate::sim::{run_session, step_chunk, Decision, PlayerState, ScriptedController, SessionResult, SimConfig, VideoSpec};
use crate::trace::{SatId, TraceSet};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct OfflineResult {
    /// The optimal schedule replayed through the simulator.
    pub session: SessionResult,
    /// `(bitrate_idx, satellite)` for every chunk.
    pub plan: Vec<(usize, SatId)>,
    /// Distinct states kept across all stages.
    pub states: usize,
}

struct Node {
    state: PlayerState,
    qoe: f64,
    parent: usize,
    action: (usize, SatId),
}

fn cell(x: f64, dt: f64) -> i64 {
    (x / dt).floor() as i64
}

/// Best whole-session schedule with full knowledge of the trace. States are
/// `(chunk, floor(T/dt), floor(B/dt), bitrate, satellite)`; any visible
/// satellite may be chosen before any chunk.
pub fn offline_optimal(trace: &TraceSet, video: &VideoSpec, cfg: &SimConfig, dt: f64) -> Result<OfflineResult> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig("offline dt must be positive".into()));
    }
    video.validate()?;
    cfg.validate()?;
    let root = PlayerState::initial(trace)?;
    let mut arena = vec![Node {
        state: root,
        qoe: 0.0,
        parent: usize::MAX,
        action: (0, SatId(0)),
    }];
    let mut stage = vec![0usize];
    let mut index: HashMap<(i64, i64, usize, SatId), usize> = HashMap::new();
    let mut states = 0;
    let all: Vec<SatId> = trace.sat_ids().collect();
    for _ in 0..video.n_chunks {
        index.clear();
        let mut next = Vec::new();
        for &ni in &stage {
            let state = arena[ni].state.clone();
            let base = arena[ni].qoe;
            let visible = trace.visible_at_or_last(state.wallclock_s);
            let sats = if visible.is_empty() { &all } else { &visible };
            for &sat in sats {
                for r in 0..video.levels() {
                    let d = Decision::to(&state, r, sat);
                    let Ok((after, out)) = step_chunk(&state, &d, trace, video, cfg) else {
                        continue;
                    };
                    let qoe = base + out.qoe();
                    let key = (cell(after.wallclock_s, dt), cell(after.buffer_s, dt), r, sat);
                    match index.get(&key) {
                        Some(&i) if arena[i].qoe >= qoe => {}
                        Some(&i) => {
                            arena[i] = Node { state: after, qoe, parent: ni, action: (r, sat) };
                        }
                        None => {
                            index.insert(key, arena.len());
                            next.push(arena.len());
                            arena.push(Node { state: after, qoe, parent: ni, action: (r, sat) });
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            return Err(Error::UnboundedDownload {
                sat: arena[stage[0]].state.current_satellite,
                start_s: arena[stage[0]].state.wallclock_s,
            });
        }
        states += next.len();
        stage = next;
    }

    let mut best = stage[0];
    for &i in &stage[1..] {
        if arena[i].qoe > arena[best].qoe {
            best = i;
        }
    }
    let mut plan = Vec::with_capacity(video.n_chunks);
    let mut i = best;
    while arena[i].parent != usize::MAX {
        plan.push(arena[i].action);
        i = arena[i].parent;
    }
    plan.reverse();

    let mut replay = ScriptedController::new(plan.clone());
    let mut session = run_session(trace, video, cfg, &mut replay)?;
    session.controller = "offline-optimal".into();
    Ok(OfflineResult { session, plan, states })
}
