use std::collections::BTreeMap;

use super::{PredictorKind, SatPredictor, DEFAULT_WINDOW};
use crate::sim::{ChunkOutcome, DecisionContext, RateCurve};
use crate::trace::{grid_index, SatId, TraceSet};
use crate::{Error, Result};

/// Length of true future handed to planners by the oracle.
const ORACLE_WINDOW_S: f64 = 120.0;

/// Predicted rate of one satellite over a planning horizon.
#[derive(Clone, Debug, PartialEq)]
pub enum Forecast {
    /// A single estimate, in force until the satellite sets (if known).
    Constant { rate_mbps: f64, until_s: Option<f64> },
    /// Per-sample rates on the trace grid, starting at sample
    /// `first_index`. The last value holds past the end.
    Samples {
        first_index: usize,
        dt: f64,
        values: Vec<f64>,
    },
}

impl Forecast {
    pub fn constant(rate_mbps: f64) -> Self {
        Self::Constant {
            rate_mbps,
            until_s: None,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Constant { rate_mbps, until_s } => Self::Constant {
                rate_mbps: rate_mbps * factor,
                until_s: *until_s,
            },
            Self::Samples {
                first_index,
                dt,
                values,
            } => Self::Samples {
                first_index: *first_index,
                dt: *dt,
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    /// Average predicted rate over `[t, t + span]`.
    pub fn mean_rate(&self, t: f64, span: f64) -> f64 {
        match self {
            Self::Constant { rate_mbps, until_s } => match until_s {
                Some(u) if *u <= t => 0.0,
                Some(u) if *u < t + span => rate_mbps * (u - t) / span,
                _ => *rate_mbps,
            },
            Self::Samples {
                first_index,
                dt,
                values,
            } => {
                let lo = grid_index(t, *dt).saturating_sub(*first_index);
                let hi = grid_index(t + span, *dt).saturating_sub(*first_index);
                let at = |i: usize| values[i.min(values.len() - 1)];
                let n = hi - lo + 1;
                (lo..=hi).map(at).sum::<f64>() / n as f64
            }
        }
    }
}

impl RateCurve for Forecast {
    fn segment(&self, t: f64) -> (f64, Option<f64>) {
        match self {
            Self::Constant { rate_mbps, until_s } => match until_s {
                Some(u) if t < *u => (*rate_mbps, Some(*u)),
                Some(_) => (0.0, None),
                None => (*rate_mbps, None),
            },
            Self::Samples {
                first_index,
                dt,
                values,
            } => {
                let k = grid_index(t, *dt);
                let last = first_index + values.len() - 1;
                if k >= last {
                    (values[values.len() - 1], None)
                } else {
                    let i = k.saturating_sub(*first_index);
                    (values[i], Some((k + 1) as f64 * dt))
                }
            }
        }
    }
}

/// True per-sample throughput of `sat` over `[t, t + horizon_s]`, clipped
/// at the end of the trace.
pub fn oracle_predict(trace: &TraceSet, sat: SatId, t: f64, horizon_s: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) || t >= trace.duration() {
        return Err(Error::TimeOutOfRange {
            t,
            duration: trace.duration(),
        });
    }
    let tp = &trace.satellite(sat)?.samples.throughput_mbps;
    let lo = trace.sample_index(t);
    let hi = trace.sample_index(t + horizon_s.max(0.0));
    Ok(tp[lo..=hi].to_vec())
}

/// Per-client predictor bank: one robust predictor per satellite, fed by
/// realized chunk throughput on the serving satellite and by probes of the
/// others at every decision.
#[derive(Clone, Debug)]
pub struct Forecaster {
    kind: PredictorKind,
    window: usize,
    ranking_span_s: f64,
    sats: BTreeMap<SatId, SatPredictor>,
}

impl Forecaster {
    pub fn new(kind: PredictorKind) -> Self {
        Self::with_window(kind, DEFAULT_WINDOW, 10.0)
    }

    pub fn with_window(kind: PredictorKind, window: usize, ranking_span_s: f64) -> Self {
        Self {
            kind,
            window,
            ranking_span_s,
            sats: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> PredictorKind {
        self.kind
    }

    fn entry(&mut self, sat: SatId) -> &mut SatPredictor {
        let window = self.window;
        self.sats.entry(sat).or_insert_with(|| SatPredictor::new(window))
    }

    pub fn predictor(&self, sat: SatId) -> Option<&SatPredictor> {
        self.sats.get(&sat)
    }

    /// Feeds probes of every visible satellite other than the serving one
    /// (the serving one too while it has no history yet).
    pub fn ingest_probes(&mut self, ctx: &DecisionContext<'_>) {
        let t = ctx.state.wallclock_s;
        let current = ctx.state.current_satellite;
        for &(sat, rate) in ctx.probes {
            let p = self.entry(sat);
            if sat != current || p.history.is_empty() {
                p.observe(t, rate);
            }
        }
    }

    /// Feeds every probe, serving satellite included.
    pub fn ingest_all(&mut self, t: f64, probes: &[(SatId, f64)]) {
        for &(sat, rate) in probes {
            self.entry(sat).observe(t, rate);
        }
    }

    pub fn ingest_chunk(&mut self, outcome: &ChunkOutcome) {
        let t = outcome.start_s + outcome.wait_s;
        let rate = outcome.throughput_mbps;
        if rate.is_finite() {
            self.entry(outcome.satellite).observe(t, rate);
        }
    }

    fn robust_rate(&self, ctx: &DecisionContext<'_>, sat: SatId) -> f64 {
        self.sats
            .get(&sat)
            .and_then(|p| p.peek().ok())
            .or_else(|| ctx.probe(sat))
            .unwrap_or(0.0)
    }

    /// Fraction of the raw trace rate this client currently gets on `sat`.
    fn share_factor(ctx: &DecisionContext<'_>, sat: SatId) -> f64 {
        let raw = ctx.trace.mean_throughput(sat, ctx.state.wallclock_s, ctx.cfg.probe_window_s).unwrap_or(0.0);
        match ctx.probe(sat) {
            Some(p) if raw > 0.0 => (p / raw).min(1.0),
            _ => 1.0,
        }
    }

    fn oracle_forecast(ctx: &DecisionContext<'_>, sat: SatId) -> Result<Forecast> {
        let t = ctx.state.wallclock_s;
        let trace = ctx.trace;
        if t >= trace.duration() {
            return Ok(Forecast::constant(trace.throughput_at(sat, t)?));
        }
        let values = oracle_predict(trace, sat, t, ORACLE_WINDOW_S)?;
        let f = Forecast::Samples {
            first_index: trace.sample_index(t),
            dt: trace.sample_dt,
            values,
        };
        let factor = Self::share_factor(ctx, sat);
        Ok(if factor == 1.0 { f } else { f.scaled(factor) })
    }

    /// Scalar estimate used to rank handoff candidates.
    pub fn predicted_rate(&self, ctx: &DecisionContext<'_>, sat: SatId) -> f64 {
        match self.kind {
            PredictorKind::Robust => self.robust_rate(ctx, sat),
            PredictorKind::Oracle => Self::oracle_forecast(ctx, sat)
                .map(|f| f.mean_rate(ctx.state.wallclock_s, self.ranking_span_s))
                .unwrap_or(0.0),
        }
    }

    /// Planner input for `sat`. Robust forecasts hold until the satellite's
    /// known visibility end.
    pub fn forecast(&mut self, ctx: &DecisionContext<'_>, sat: SatId) -> Result<Forecast> {
        match self.kind {
            PredictorKind::Robust => {
                let until_s = ctx.trace.visible_until(sat, ctx.state.wallclock_s)?;
                let rate_mbps = match self.sats.get_mut(&sat).map(|p| p.predict()) {
                    Some(Ok(r)) => r,
                    _ => ctx.probe(sat).unwrap_or(0.0),
                };
                Ok(Forecast::Constant { rate_mbps, until_s })
            }
            PredictorKind::Oracle => Self::oracle_forecast(ctx, sat),
        }
    }
}
