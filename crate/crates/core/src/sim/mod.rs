//! Chunk-by-chunk playback simulation and QoE accounting.

mod download;
mod player;
mod qoe;
mod session;
mod video;

pub use download::{download_time, integrate_transfer, RateCurve, SatLink, Scaled};
pub use player::{
    apply_chunk, buffer_step, step_chunk, BufferStep, ChunkOutcome, Decision, PlayerState,
};
pub use qoe::{chunk_qoe, qos, quality, session_qoe, QoEBreakdown};
pub use session::{
    run_session, single_user_probes, Controller, DecisionContext, ScriptedController, SessionReport,
    SessionResult,
};
pub use video::{SimConfig, VideoSpec};
