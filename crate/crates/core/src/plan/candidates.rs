use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::trace::SatId;
use crate::Error;

/// Which visible satellites the joint planner considers as handoff targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// Only the best-predicted runner-up.
    Dual,
    /// Every visible satellite.
    Manifold,
}

impl CandidateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dual => "dual",
            Self::Manifold => "manifold",
        }
    }
}

impl FromStr for CandidateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "dual" => Ok(Self::Dual),
            "manifold" => Ok(Self::Manifold),
            other => Err(Error::InvalidConfig(format!("unknown candidate mode `{other}`"))),
        }
    }
}

/// Handoff candidates among `visible`, given per-satellite predicted rates.
///
/// Dual mode skips the satellite we last handed off from, so the planner
/// does not bounce between the same pair; when that satellite is the only
/// alternative it is kept, otherwise a two-satellite sky could never hand
/// back.
pub fn select_candidates(
    mode: CandidateMode,
    visible: &[SatId],
    predicted: impl Fn(SatId) -> f64,
    current: SatId,
    previous: Option<SatId>,
) -> Vec<SatId> {
    let others: Vec<SatId> = visible.iter().copied().filter(|&s| s != current).collect();
    match mode {
        CandidateMode::Manifold => others,
        CandidateMode::Dual => {
            let fresh: Vec<SatId> = others.iter().copied().filter(|&s| Some(s) != previous).collect();
            let pool = if fresh.is_empty() { &others } else { &fresh };
            let mut best: Option<(SatId, f64)> = None;
            for &s in pool {
                let p = predicted(s);
                // strict `>` keeps the lower id on ties since ids ascend
                if best.is_none_or(|(b, bp)| p > bp || (p == bp && s < b)) {
                    best = Some((s, p));
                }
            }
            best.map(|(s, _)| vec![s]).unwrap_or_default()
        }
    }
}
