use std::collections::{BTreeMap, HashMap};

use super::{MultiPolicy, MultiView};
use crate::plan::{exhaustive_search, InnerSearch, PlanInstance, DEFAULT_HORIZON};
use crate::predict::{Forecast, Forecaster, PredictorKind};
use crate::sim::{Decision, DecisionContext, PlayerState, SimConfig, VideoSpec};
use crate::trace::SatId;
use crate::{Error, Result};

/// Joint search over every user's options grows as 11^U; beyond this it
/// is refused.
pub const CENTRALIZED_USER_CAP: usize = 3;

/// Handoff candidates kept per user.
const CANDIDATES_PER_USER: usize = 2;

pub struct CentralUser<'a> {
    pub state: &'a PlayerState,
    pub serving: SatId,
    /// Already pruned, any order.
    pub candidates: Vec<SatId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CentralChoice {
    /// `(satellite, h)`; `None` stays on the serving satellite.
    pub handoff: Option<(SatId, usize)>,
    pub qoe: f64,
    pub plan: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CentralResult {
    /// `None` for users with nothing left to download.
    pub choices: Vec<Option<CentralChoice>>,
    /// Sum of the chosen per-user horizon QoEs.
    pub objective: f64,
    pub assignments: usize,
    pub inner_calls: usize,
}

type Choice = Option<(SatId, usize)>;

/// (user, option index, per-chunk sharer counts) of one inner search.
type MemoKey = (usize, usize, Vec<u8>);

fn sat_at(opt: Choice, serving: SatId, n: usize) -> SatId {
    match opt {
        Some((s, h)) if n >= h => s,
        _ => serving,
    }
}

/// Chooses every user's (satellite, handoff point, bitrate plan) to
/// maximize the summed horizon QoE. A user's rate on a satellite during its
/// `n`-th horizon chunk is the forecast divided by the number of users
/// whose assignment puts them on that satellite for their `n`-th chunk.
/// Ties go to the first assignment in user-id lexicographic order, each
/// user preferring staying, then later handoffs, then lower satellite ids.
pub fn centralized_mpc_decide(
    users: &[CentralUser<'_>],
    forecasts: &BTreeMap<SatId, Forecast>,
    horizon: usize,
    search: InnerSearch,
    video: &VideoSpec,
    cfg: &SimConfig,
    cap: usize,
) -> Result<CentralResult> {
    if users.len() > cap {
        return Err(Error::TooManyUsers {
            users: users.len(),
            cap,
        });
    }
    let dead = Forecast::constant(0.0);
    let forecast = |s: SatId| forecasts.get(&s).unwrap_or(&dead);

    let horizons: Vec<usize> = users
        .iter()
        .map(|u| horizon.min(video.n_chunks.saturating_sub(u.state.chunk_index)))
        .collect();
    let options: Vec<Vec<Choice>> = users
        .iter()
        .zip(&horizons)
        .map(|(u, &f)| {
            if f == 0 {
                return Vec::new();
            }
            let mut cands: Vec<SatId> = u.candidates.iter().copied().filter(|&s| s != u.serving).collect();
            cands.sort_unstable();
            cands.dedup();
            let mut opts = vec![None];
            for h in (1..=f).rev() {
                opts.extend(cands.iter().map(|&s| Some((s, h))));
            }
            opts
        })
        .collect();
    let live: Vec<usize> = (0..users.len()).filter(|&v| !options[v].is_empty()).collect();

    let mut memo: HashMap<MemoKey, (f64, Vec<usize>)> = HashMap::new();
    let mut pick = vec![0usize; users.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut assignments = 0;
    loop {
        assignments += 1;
        let mut counts: HashMap<(usize, SatId), u8> = HashMap::new();
        for &v in &live {
            let opt = options[v][pick[v]];
            for n in 1..=horizons[v] {
                *counts.entry((n, sat_at(opt, users[v].serving, n))).or_default() += 1;
            }
        }
        let mut total = 0.0;
        for &v in &live {
            let opt = options[v][pick[v]];
            let key: Vec<u8> = (1..=horizons[v])
                .map(|n| counts[&(n, sat_at(opt, users[v].serving, n))])
                .collect();
            let entry = memo.entry((v, pick[v], key)).or_insert_with_key(|(_, _, key)| {
                let share: Vec<f64> = key.iter().map(|&c| 1.0 / c as f64).collect();
                let base = PlanInstance::from_state(users[v].state, horizon, forecast(users[v].serving), video, cfg)
                    .with_share(&share);
                let res = match opt {
                    None => exhaustive_search(&base),
                    Some((s, h)) => search.run(&base.with_handoff(h, forecast(s))),
                };
                (res.best_qoe, res.full_bitrate_plan)
            });
            total += entry.0;
        }
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, pick.clone()));
        }
        // odometer, last live user fastest
        let mut carry = true;
        for &v in live.iter().rev() {
            pick[v] += 1;
            if pick[v] < options[v].len() {
                carry = false;
                break;
            }
            pick[v] = 0;
        }
        if carry || live.is_empty() {
            break;
        }
    }

    let (objective, chosen) = best.expect("at least one assignment");
    let mut counts: HashMap<(usize, SatId), u8> = HashMap::new();
    for &v in &live {
        for n in 1..=horizons[v] {
            *counts
                .entry((n, sat_at(options[v][chosen[v]], users[v].serving, n)))
                .or_default() += 1;
        }
    }
    let choices = (0..users.len())
        .map(|v| {
            if options[v].is_empty() {
                return None;
            }
            let opt = options[v][chosen[v]];
            let key: Vec<u8> = (1..=horizons[v])
                .map(|n| counts[&(n, sat_at(opt, users[v].serving, n))])
                .collect();
            let (qoe, plan) = memo[&(v, chosen[v], key)].clone();
            Some(CentralChoice {
                handoff: opt,
                qoe,
                plan,
            })
        })
        .collect();
    Ok(CentralResult {
        choices,
        objective,
        assignments,
        inner_calls: memo.len(),
    })
}

/// One coordinator deciding for all users from shared capacity estimates.
pub struct CentralizedMpc {
    pub horizon: usize,
    pub search: InnerSearch,
    pub cap: usize,
    forecaster: Forecaster,
}

impl CentralizedMpc {
    pub fn new(predictor: PredictorKind) -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            search: InnerSearch::default(),
            cap: CENTRALIZED_USER_CAP,
            forecaster: Forecaster::new(predictor),
        }
    }
}

impl MultiPolicy for CentralizedMpc {
    fn name(&self, _user: usize) -> String {
        "centralized".into()
    }

    fn decide(&mut self, user: usize, ctx: &DecisionContext<'_>, view: &MultiView<'_>) -> Result<Decision> {
        let n_users = view.states.len();
        if n_users > self.cap {
            return Err(Error::TooManyUsers {
                users: n_users,
                cap: self.cap,
            });
        }
        let t = ctx.state.wallclock_s;
        let raw: Vec<(SatId, f64)> = ctx.visible().map(|s| (s, view.residual_mbps(s, t, ctx.cfg.probe_window_s))).collect();
        self.forecaster.ingest_all(t, &raw);
        let raw_ctx = DecisionContext { probes: &raw, ..*ctx };
        let mut forecasts = BTreeMap::new();
        let mut ranked = Vec::new();
        for &(s, _) in &raw {
            ranked.push((s, self.forecaster.predicted_rate(&raw_ctx, s)));
            forecasts.insert(s, self.forecaster.forecast(&raw_ctx, s)?);
        }
        // best predicted first, ties to the lower id
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut users = Vec::new();
        let mut slot = 0;
        for v in 0..n_users {
            if v != user && !view.active[v] {
                continue;
            }
            if v == user {
                slot = users.len();
            }
            let (state, serving) = if v == user {
                (ctx.state, ctx.state.current_satellite)
            } else {
                (&view.states[v], view.serving[v])
            };
            let candidates = ranked
                .iter()
                .map(|&(s, _)| s)
                .filter(|&s| s != serving)
                .take(CANDIDATES_PER_USER)
                .collect();
            users.push(CentralUser {
                state,
                serving,
                candidates,
            });
        }
        let res = centralized_mpc_decide(&users, &forecasts, self.horizon, self.search, ctx.video, ctx.cfg, self.cap)?;
        let state = ctx.state;
        Ok(match &res.choices[slot] {
            Some(c) if c.qoe.is_finite() => match c.handoff {
                Some((s, 1)) => Decision::to(state, c.plan[0], s),
                _ => Decision::stay(state, c.plan[0]),
            },
            _ => {
                let fastest = ctx
                    .probes
                    .iter()
                    .copied()
                    .reduce(|a, b| if b.1 > a.1 { b } else { a })
                    .map_or(state.current_satellite, |(s, _)| s);
                Decision::to(state, 0, fastest)
            }
        })
    }
}
