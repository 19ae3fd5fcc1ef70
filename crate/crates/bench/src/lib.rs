//! Seeded planner workloads shared by the benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satstream::plan::PlanInstance;
use satstream::{Forecast, SimConfig, VideoSpec};

/// Owned inputs of one horizon problem.
pub struct Workload {
    pub current: Forecast,
    pub target: Forecast,
    pub buffer_s: f64,
    pub prev: usize,
    pub h: usize,
}

impl Workload {
    pub fn instance<'a>(&'a self, horizon: usize, video: &'a VideoSpec, cfg: &'a SimConfig) -> PlanInstance<'a> {
        PlanInstance {
            horizon,
            start_s: 0.0,
            buffer_s: self.buffer_s,
            prev_bitrate_idx: Some(self.prev.min(video.levels() - 1)),
            current: &self.current,
            handoff: None,
            share: None,
            video,
            cfg,
        }
        .with_handoff(self.h.min(horizon), &self.target)
    }
}

/// Piecewise-constant forecasts on a 1 s grid, rates in [0.2, 6) Mbps.
pub fn workloads(n: usize, seed: u64) -> Vec<Workload> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series = |rng: &mut ChaCha8Rng| Forecast::Samples {
        first_index: 0,
        dt: 1.0,
        values: (0..120).map(|_| rng.random_range(0.2..6.0)).collect(),
    };
    (0..n)
        .map(|_| Workload {
            current: series(&mut rng),
            target: series(&mut rng),
            buffer_s: rng.random_range(0.0..20.0),
            prev: rng.random_range(0..6),
            h: rng.random_range(1..=5),
        })
        .collect()
}
