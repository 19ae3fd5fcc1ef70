use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;

use super::share::per_user_share;
use super::BackgroundProfile;
use crate::sim::{
    apply_chunk, qos, session_qoe, ChunkOutcome, Controller, Decision, DecisionContext, PlayerState, RateCurve,
    SatLink, SessionResult, SimConfig, VideoSpec,
};
use crate::trace::{SatId, TraceSet};
use crate::{Error, Result};

/// What every client is doing, as seen by a coordinating policy.
pub struct MultiView<'a> {
    /// Each user's state at its latest chunk boundary.
    pub states: &'a [PlayerState],
    /// Satellite each user is attached to (target of its latest decision).
    pub serving: &'a [SatId],
    /// Users still playing.
    pub active: &'a [bool],
    pub trace: &'a TraceSet,
    pub background: &'a BackgroundProfile,
}

impl MultiView<'_> {
    /// Capacity of `sat` left over by background traffic.
    pub fn residual_mbps(&self, sat: SatId, t: f64, window: f64) -> f64 {
        let cap = self.trace.mean_throughput(sat, t, window).unwrap_or(0.0);
        per_user_share(cap, 1, self.background.fraction_clamped(sat, t))
    }
}

/// Decides for one user at a time, possibly looking at the others.
pub trait MultiPolicy {
    fn name(&self, user: usize) -> String;

    fn decide(&mut self, user: usize, ctx: &DecisionContext<'_>, view: &MultiView<'_>) -> Result<Decision>;

    fn on_chunk(&mut self, _user: usize, _outcome: &ChunkOutcome) {}
}

/// Every user runs its own controller and sees only its own probes.
pub struct Independent<C>(pub Vec<C>);

impl<C: Controller> MultiPolicy for Independent<C> {
    fn name(&self, user: usize) -> String {
        self.0[user].name()
    }

    fn decide(&mut self, user: usize, ctx: &DecisionContext<'_>, _view: &MultiView<'_>) -> Result<Decision> {
        self.0[user].decide(ctx)
    }

    fn on_chunk(&mut self, user: usize, outcome: &ChunkOutcome) {
        self.0[user].on_chunk(outcome)
    }
}

/// Allocation on one satellite after a batch of simultaneous events.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShareEvent {
    pub time_s: f64,
    pub satellite: SatId,
    pub active_users: Vec<usize>,
    pub per_user_mbps: Vec<f64>,
    pub capacity_mbps: f64,
    pub background_mbps: f64,
}

#[derive(Clone, Debug)]
pub struct UserResult {
    pub user: usize,
    pub controller: String,
    /// Failed users carry a diagnostic instead of a session.
    pub session: std::result::Result<SessionResult, String>,
}

#[derive(Clone, Debug)]
pub struct MultiResult {
    pub users: Vec<UserResult>,
    /// Mean QoE over users that finished; `None` if none did.
    pub qos: Option<f64>,
    pub events: Vec<ShareEvent>,
}

#[derive(Clone, Debug)]
struct Transfer {
    d: Decision,
    delay: f64,
    start: f64,
    remaining: f64,
    t_last: f64,
    rate: f64,
    seg_end: Option<f64>,
}

impl Transfer {
    /// Next event: `(time, finishes)`, or `None` when the rate stays at zero.
    fn next(&self) -> Option<(f64, bool)> {
        if self.remaining <= 0.0 {
            return Some((self.t_last, true));
        }
        if self.rate > 0.0 && self.seg_end.is_none_or(|e| self.rate * (e - self.t_last) >= self.remaining) {
            return Some((self.t_last + self.remaining / self.rate, true));
        }
        self.seg_end.map(|e| (e, false))
    }

    fn settle(&mut self, t: f64) {
        if t > self.t_last {
            self.remaining -= self.rate * (t - self.t_last);
            self.t_last = t;
        }
    }
}

#[derive(Clone, Debug)]
enum Phase {
    Deciding,
    Waiting { d: Decision, delay: f64, start: f64, from: f64 },
    Transfer(Transfer),
    Done,
}

struct User {
    state: PlayerState,
    phase: Phase,
    outcomes: Vec<ChunkOutcome>,
    latency: Vec<f64>,
    error: Option<String>,
}

impl User {
    fn next_event(&self) -> Option<f64> {
        if self.error.is_some() {
            return None;
        }
        match &self.phase {
            Phase::Deciding => Some(self.state.wallclock_s),
            Phase::Waiting { from, .. } => Some(*from),
            Phase::Transfer(x) => x.next().map(|(t, _)| t),
            Phase::Done => None,
        }
    }
}

struct Engine<'a> {
    trace: &'a TraceSet,
    video: &'a VideoSpec,
    cfg: &'a SimConfig,
    background: &'a BackgroundProfile,
    users: Vec<User>,
    serving: Vec<SatId>,
    on_sat: BTreeMap<SatId, Vec<usize>>,
    touched: BTreeSet<SatId>,
}

impl Engine<'_> {
    fn n_active(&self, sat: SatId) -> usize {
        self.on_sat.get(&sat).map_or(0, |v| v.len())
    }

    /// Settles everyone downloading from `sat` at `t` and gives each the
    /// equal share of the segment starting there.
    fn reallocate(&mut self, sat: SatId, t: f64) -> Result<()> {
        self.touched.insert(sat);
        let link = SatLink::new(self.trace, sat)?;
        let ids = self.on_sat.get(&sat).cloned().unwrap_or_default();
        let n = ids.len();
        let mut stalled = Vec::new();
        for &i in &ids {
            let Phase::Transfer(x) = &mut self.users[i].phase else {
                unreachable!("user {i} listed on {sat} without a transfer");
            };
            x.settle(t);
            let (cap, end) = link.segment(x.t_last);
            let bg = self.background.fraction_clamped(sat, x.t_last);
            x.rate = per_user_share(cap, n, bg);
            x.seg_end = match (end, self.background.next_change(x.t_last)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            if x.next().is_none() {
                stalled.push(i);
            }
        }
        if !stalled.is_empty() {
            for &i in &stalled {
                let err = Error::UnboundedDownload {
                    sat,
                    start_s: self.users[i].state.wallclock_s,
                };
                self.fail(i, err.to_string());
            }
            self.reallocate(sat, t)?;
        }
        Ok(())
    }

    fn fail(&mut self, i: usize, msg: String) {
        self.users[i].error = Some(msg);
        if let Some(v) = self.on_sat.get_mut(&self.serving[i]) {
            v.retain(|&j| j != i);
        }
    }

    fn flush(&mut self, t: f64, log: &mut Option<Vec<ShareEvent>>) {
        let touched = std::mem::take(&mut self.touched);
        let Some(log) = log.as_mut() else { return };
        for sat in touched {
            let ids = self.on_sat.get(&sat).cloned().unwrap_or_default();
            let per_user_mbps = ids
                .iter()
                .map(|&i| match &self.users[i].phase {
                    Phase::Transfer(x) => x.rate,
                    _ => 0.0,
                })
                .collect();
            let capacity_mbps = self.trace.throughput_at(sat, t).unwrap_or(0.0);
            log.push(ShareEvent {
                time_s: t,
                satellite: sat,
                active_users: ids,
                per_user_mbps,
                capacity_mbps,
                background_mbps: capacity_mbps * self.background.fraction_clamped(sat, t),
            });
        }
    }

    fn probes(&self, t: f64) -> Vec<(SatId, f64)> {
        self.trace
            .visible_at_or_last(t)
            .into_iter()
            .map(|s| {
                let cap = self.trace.mean_throughput(s, t, self.cfg.probe_window_s).unwrap_or(0.0);
                (s, per_user_share(cap, self.n_active(s) + 1, self.background.fraction_clamped(s, t)))
            })
            .collect()
    }

    fn decide<P: MultiPolicy + ?Sized>(&mut self, i: usize, policy: &mut P) -> Result<()> {
        let state = self.users[i].state.clone();
        if state.chunk_index >= self.video.n_chunks {
            self.users[i].phase = Phase::Done;
            return Ok(());
        }
        let probes = self.probes(state.wallclock_s);
        let ctx = DecisionContext {
            state: &state,
            trace: self.trace,
            video: self.video,
            cfg: self.cfg,
            probes: &probes,
        };
        let states: Vec<PlayerState> = self.users.iter().map(|u| u.state.clone()).collect();
        let active: Vec<bool> = self
            .users
            .iter()
            .map(|u| u.error.is_none() && !matches!(u.phase, Phase::Done))
            .collect();
        let view = MultiView {
            states: &states,
            serving: &self.serving,
            active: &active,
            trace: self.trace,
            background: self.background,
        };
        let t0 = Instant::now();
        let d = policy.decide(i, &ctx, &view)?;
        self.users[i].latency.push(t0.elapsed().as_secs_f64() * 1e3);
        if d.bitrate_idx >= self.video.levels() {
            return Err(Error::InvalidConfig(format!("bitrate index {} outside the ladder", d.bitrate_idx)));
        }
        self.trace.satellite(d.target_satellite)?;
        let delay = if d.performs_handoff(&state) {
            self.cfg.handoff_delay_s
        } else {
            0.0
        };
        let start = state.wallclock_s + delay;
        self.serving[i] = d.target_satellite;
        self.users[i].phase = Phase::Waiting {
            d,
            delay,
            start,
            from: start + self.cfg.rtt_s,
        };
        Ok(())
    }

    fn begin_transfer(&mut self, i: usize, t: f64) -> Result<()> {
        let Phase::Waiting { d, delay, start, .. } = self.users[i].phase.clone() else {
            unreachable!()
        };
        self.users[i].phase = Phase::Transfer(Transfer {
            d,
            delay,
            start,
            remaining: self.video.chunk_bits(d.bitrate_idx),
            t_last: t,
            rate: 0.0,
            seg_end: None,
        });
        let list = self.on_sat.entry(d.target_satellite).or_default();
        list.push(i);
        list.sort_unstable();
        self.reallocate(d.target_satellite, t)
    }

    fn advance<P: MultiPolicy + ?Sized>(&mut self, i: usize, t: f64, policy: &mut P) -> Result<()> {
        let Phase::Transfer(x) = self.users[i].phase.clone() else {
            unreachable!()
        };
        let sat = x.d.target_satellite;
        match x.next() {
            Some((_, true)) => {
                if let Some(v) = self.on_sat.get_mut(&sat) {
                    v.retain(|&j| j != i);
                }
                let user = &mut self.users[i];
                let download_s = t - x.start;
                let (next, outcome) = apply_chunk(&user.state, &x.d, x.delay, download_s, self.video, self.cfg);
                policy.on_chunk(i, &outcome);
                user.outcomes.push(outcome);
                user.state = next;
                user.phase = Phase::Deciding;
                self.reallocate(sat, t)
            }
            _ => self.reallocate(sat, t),
        }
    }
}

/// Runs `n_users` clients that start together at t = 0 on the same trace.
/// Events are processed in time order, ties by lower user id.
pub fn simulate_multi<P: MultiPolicy + ?Sized>(
    trace: &TraceSet,
    video: &VideoSpec,
    cfg: &SimConfig,
    background: &BackgroundProfile,
    n_users: usize,
    policy: &mut P,
    log_shares: bool,
) -> Result<MultiResult> {
    video.validate()?;
    cfg.validate()?;
    if n_users == 0 {
        return Err(Error::InvalidConfig("at least one user is required".into()));
    }
    let initial = PlayerState::initial(trace)?;
    let mut eng = Engine {
        trace,
        video,
        cfg,
        background,
        users: (0..n_users)
            .map(|_| User {
                state: initial.clone(),
                phase: Phase::Deciding,
                outcomes: Vec::with_capacity(video.n_chunks),
                latency: Vec::with_capacity(video.n_chunks),
                error: None,
            })
            .collect(),
        serving: vec![initial.current_satellite; n_users],
        on_sat: BTreeMap::new(),
        touched: BTreeSet::new(),
    };
    let mut log = log_shares.then(Vec::new);
    let mut batch_t = 0.0;
    loop {
        let mut next: Option<(f64, usize)> = None;
        for (i, u) in eng.users.iter().enumerate() {
            if let Some(t) = u.next_event() {
                if next.is_none_or(|(bt, _)| t < bt) {
                    next = Some((t, i));
                }
            }
        }
        let Some((t, i)) = next else { break };
        if t > batch_t {
            eng.flush(batch_t, &mut log);
            batch_t = t;
        }
        let step = match eng.users[i].phase {
            Phase::Deciding => eng.decide(i, policy),
            Phase::Waiting { .. } => eng.begin_transfer(i, t),
            Phase::Transfer(_) => eng.advance(i, t, policy),
            Phase::Done => Ok(()),
        };
        if let Err(e) = step {
            eng.fail(i, e.to_string());
            let sat = eng.serving[i];
            eng.reallocate(sat, t)?;
        }
    }
    eng.flush(batch_t, &mut log);

    let mut users = Vec::with_capacity(n_users);
    let mut qoes = Vec::new();
    for (i, u) in eng.users.into_iter().enumerate() {
        let controller = policy.name(i);
        let session = match u.error {
            Some(msg) => Err(msg),
            None => session_qoe(&u.outcomes, cfg)
                .map(|breakdown| SessionResult {
                    controller: controller.clone(),
                    breakdown,
                    final_state: u.state,
                    decision_latency_ms: u.latency,
                })
                .map_err(|e| e.to_string()),
        };
        if let Ok(s) = &session {
            qoes.push(s.breakdown.qoe_total);
        }
        users.push(UserResult {
            user: i,
            controller,
            session,
        });
    }
    Ok(MultiResult {
        users,
        qos: qos(&qoes).ok(),
        events: log.unwrap_or_default(),
    })
}
