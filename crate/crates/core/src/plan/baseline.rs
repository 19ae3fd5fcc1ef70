use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sim::DecisionContext;
use crate::trace::SatId;
use crate::{Error, Result};

/// Handoff rules that ignore the video player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineStrategy {
    /// Maximum remaining visible time, switching only as the current pass ends.
    Mvt,
    /// Maximum signal strength (elevation), switching whenever beaten.
    Mrss,
    /// Maximum available bandwidth, switching only as the current pass ends.
    Mb,
}

impl BaselineStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Mvt => "mvt",
            Self::Mrss => "mrss",
            Self::Mb => "mb",
        }
    }
}

impl FromStr for BaselineStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mvt" => Ok(Self::Mvt),
            "mrss" => Ok(Self::Mrss),
            "mb" => Ok(Self::Mb),
            other => Err(Error::InvalidConfig(format!("unknown handoff strategy `{other}`"))),
        }
    }
}

/// Highest-scoring satellite; ties go to the lower id.
fn argmax(sats: &[SatId], mut score: impl FnMut(SatId) -> Result<f64>) -> Result<SatId> {
    let mut best: Option<(SatId, f64)> = None;
    for &s in sats {
        let v = score(s)?;
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((s, v));
        }
    }
    Ok(best.expect("non-empty").0)
}

/// Satellite a baseline rule serves the next chunk from.
pub fn baseline_handoff(strategy: BaselineStrategy, ctx: &DecisionContext<'_>) -> Result<SatId> {
    let t = ctx.state.wallclock_s;
    let current = ctx.state.current_satellite;
    let visible: Vec<SatId> = ctx.visible().collect();
    if visible.is_empty() {
        return Err(Error::NoVisibleSatellite { t });
    }
    let trace = ctx.trace;
    match strategy {
        BaselineStrategy::Mrss => {
            let best = argmax(&visible, |s| trace.elevation_at(s, t))?;
            if visible.contains(&current)
                && trace.elevation_at(best, t)? <= trace.elevation_at(current, t)?
            {
                Ok(current)
            } else {
                Ok(best)
            }
        }
        BaselineStrategy::Mvt | BaselineStrategy::Mb => {
            let expiring = !visible.contains(&current)
                || trace.remaining_visible(current, t)? <= ctx.video.chunk_duration_s;
            if !expiring {
                return Ok(current);
            }
            if strategy == BaselineStrategy::Mvt {
                argmax(&visible, |s| trace.remaining_visible(s, t))
            } else {
                argmax(&visible, |s| Ok(ctx.probe(s).unwrap_or(0.0)))
            }
        }
    }
}
