//! Trace-driven simulation of adaptive video streaming over LEO satellite
//! links, together with planners that choose the video bitrate and the
//! serving satellite for every chunk.
//!
//! The crate is organised bottom-up:
//!
//! - [`trace`]: synthetic multi-satellite throughput traces built from pass
//!   geometry and a free-space path loss model, plus CSV persistence.
//! - [`sim`]: chunk-by-chunk playback, buffer dynamics and QoE accounting.
//! - [`predict`]: harmonic-mean, error-corrected and oracle throughput
//!   predictors.
//! - [`plan`]: single-satellite MPC, joint satellite/bitrate MPC (exhaustive
//!   and DP-accelerated), separate-selection baselines, offline optimum.
//! - [`multi`]: several users sharing satellite capacity, and the
//!   centralized multi-user MPC.

pub mod error;
pub mod json;
pub mod multi;
pub mod plan;
pub mod predict;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use plan::{
    BaselineStrategy, CandidateMode, Controller, Decision, Forecast, InnerSearch, PlanInstance,
    PlanResult,
};
pub use predict::PredictorKind;
pub use sim::{ChunkOutcome, PlayerState, QoEBreakdown, SimConfig, VideoSpec};
pub use trace::{SatId, TraceGenConfig, TraceSet};
