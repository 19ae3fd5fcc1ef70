//! Bitrate and satellite planners.

mod baseline;
mod candidates;
mod controllers;
mod dp;
mod exhaustive;
mod horizon;
mod joint;
mod offline;

pub use baseline::{baseline_handoff, BaselineStrategy};
pub use candidates::{select_candidates, CandidateMode};
pub use controllers::{CandidateDump, JointController, SeparateController, DEFAULT_HORIZON};
pub use dp::dp_search;
pub use exhaustive::exhaustive_search;
pub use horizon::{evaluate_plan, PlanInstance, PlanResult};
pub use joint::{joint_mpc_decide, CandidateRow, JointProblem, JointResult};
pub use offline::{offline_optimal, OfflineResult};

pub use crate::predict::Forecast;
pub use crate::sim::{Controller, Decision};

use serde::{Deserialize, Serialize};

/// Search used for each horizon problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSearch {
    /// Enumerate every bitrate plan.
    Exhaustive,
    /// Dynamic program over states discretized at `dt_s`.
    Dp { dt_s: f64 },
}

impl Default for InnerSearch {
    fn default() -> Self {
        Self::Dp { dt_s: 1.0 }
    }
}

impl InnerSearch {
    pub fn run(&self, inst: &PlanInstance<'_>) -> PlanResult {
        match *self {
            Self::Exhaustive => exhaustive_search(inst),
            Self::Dp { dt_s } => dp_search(inst, dt_s),
        }
    }
}
