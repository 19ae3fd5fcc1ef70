use serde::{Deserialize, Serialize};

use super::{ChunkOutcome, SimConfig};
use crate::{Error, Result};

/// Quality score of a bitrate: linear in Mbps.
pub fn quality(bitrate_mbps: f64) -> f64 {
    bitrate_mbps
}

/// `mu1*Q(cur) - mu2*rebuffer - mu3*|Q(cur) - Q(prev)|`.
pub fn chunk_qoe(prev_bitrate_mbps: f64, bitrate_mbps: f64, rebuffer_s: f64, cfg: &SimConfig) -> f64 {
    let q = quality(bitrate_mbps);
    cfg.mu1 * q - cfg.mu2 * rebuffer_s - cfg.mu3 * (q - quality(prev_bitrate_mbps)).abs()
}

/// Session totals. Each total already carries its weight, so
/// `qoe_total == quality_total - rebuf_penalty_total - smooth_penalty_total`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QoEBreakdown {
    pub quality_total: f64,
    pub rebuf_penalty_total: f64,
    pub smooth_penalty_total: f64,
    pub qoe_total: f64,
    pub rebuffer_s: f64,
    pub per_chunk: Vec<ChunkOutcome>,
}

pub fn session_qoe(outcomes: &[ChunkOutcome], _cfg: &SimConfig) -> Result<QoEBreakdown> {
    let Some(first) = outcomes.first() else {
        return Err(Error::Empty("session has no chunks"));
    };
    let mut b = QoEBreakdown {
        quality_total: 0.0,
        rebuf_penalty_total: 0.0,
        smooth_penalty_total: 0.0,
        qoe_total: 0.0,
        rebuffer_s: 0.0,
        per_chunk: outcomes.to_vec(),
    };
    for (i, o) in outcomes.iter().enumerate() {
        let expected = first.chunk_index + i;
        if o.chunk_index != expected {
            return Err(Error::ChunkGap {
                expected,
                found: o.chunk_index,
            });
        }
        b.quality_total += o.qoe_quality;
        b.rebuf_penalty_total += o.qoe_rebuf_penalty;
        b.smooth_penalty_total += o.qoe_smooth_penalty;
        b.qoe_total += o.qoe();
        b.rebuffer_s += o.rebuffer_s;
    }
    Ok(b)
}

/// Mean QoE across users.
pub fn qos(per_user_qoe: &[f64]) -> Result<f64> {
    if per_user_qoe.is_empty() {
        return Err(Error::Empty("no users"));
    }
    Ok(per_user_qoe.iter().sum::<f64>() / per_user_qoe.len() as f64)
}
