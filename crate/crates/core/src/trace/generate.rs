use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{PassGeometry, SatId, SatelliteTrace, Samples, TraceMeta, TraceSet};
use crate::{Error, Result};

/// Parameters of the synthetic trace generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceGenConfig {
    /// Dimensionless scale applied to `b_max_mbps`.
    pub alpha: f64,
    pub b_max_mbps: f64,
    pub noise_mean: f64,
    pub noise_std: f64,
    pub sample_dt: f64,
    pub duration_s: f64,
    pub n_satellites: usize,
    pub min_elevation_deg: f64,
    pub seed: u64,
    pub altitude_km: f64,
    pub speed_kms: f64,
    /// Cross-track offsets are drawn uniformly from `[0, max_cross_track_km]`.
    pub max_cross_track_km: f64,
    /// Fraction of the previous pass length that the next pass overlaps.
    pub overlap_fraction: f64,
    /// How far into its window the first pass is at t = 0, in `[0, 1]`.
    pub first_pass_phase: f64,
}

impl Default for TraceGenConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            b_max_mbps: 20.0,
            noise_mean: -2.0,
            noise_std: 1.0,
            sample_dt: 1.0,
            duration_s: 600.0,
            n_satellites: 4,
            min_elevation_deg: 25.0,
            seed: 0,
            altitude_km: 550.0,
            speed_kms: 7.6,
            max_cross_track_km: 300.0,
            overlap_fraction: 0.25,
            first_pass_phase: 0.5,
        }
    }
}

impl TraceGenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.b_max_mbps > 0.0) {
            return bad("b_max_mbps must be positive");
        }
        if !(self.sample_dt > 0.0) {
            return bad("sample_dt must be positive");
        }
        if !(self.duration_s > 0.0) {
            return bad("duration_s must be positive");
        }
        if self.n_satellites == 0 {
            return bad("n_satellites must be at least 1");
        }
        if !(self.alpha >= 0.0) || !(self.noise_std >= 0.0) {
            return bad("alpha and noise_std must be non-negative");
        }
        if !(self.min_elevation_deg > 0.0 && self.min_elevation_deg < 90.0) {
            return bad("min_elevation_deg must lie in (0, 90)");
        }
        if !(self.altitude_km > 0.0) || !(self.speed_kms > 0.0) {
            return bad("altitude_km and speed_kms must be positive");
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return bad("overlap_fraction must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.first_pass_phase) {
            return bad("first_pass_phase must lie in [0, 1]");
        }
        let max_horizontal = self.altitude_km / self.min_elevation_deg.to_radians().tan();
        if !(self.max_cross_track_km >= 0.0 && self.max_cross_track_km < max_horizontal) {
            return bad("max_cross_track_km must be below the mask's ground radius");
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        ((self.duration_s / self.sample_dt) - 1e-9).ceil().max(1.0) as usize
    }
}

fn quantize6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn snap(t: f64, dt: f64) -> f64 {
    (t / dt).round() * dt
}

/// Lays passes out round-robin over the satellites, each overlapping the
/// previous one, until the scenario is covered.
fn schedule_passes(cfg: &TraceGenConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<PassGeometry>>> {
    let mut per_sat: Vec<Vec<PassGeometry>> = vec![Vec::new(); cfg.n_satellites];
    let mut prev: Option<PassGeometry> = None;
    let mut j = 0usize;
    loop {
        let cross = if cfg.max_cross_track_km > 0.0 {
            rng.random_range(0.0..=cfg.max_cross_track_km)
        } else {
            0.0
        };
        let make = |ca: f64| {
            PassGeometry::with_mask(
                ca,
                cfg.altitude_km,
                if j.is_multiple_of(2) { cross } else { -cross },
                cfg.speed_kms,
                cfg.min_elevation_deg,
            )
            .ok_or_else(|| Error::InvalidConfig("pass never reaches the elevation mask".into()))
        };
        let len = make(0.0)?.duration();
        let start = match prev {
            None => -cfg.first_pass_phase * len,
            Some(p) => p.pass_end - cfg.overlap_fraction * p.duration(),
        };
        let ca = match prev {
            // floor keeps t = 0 inside the first pass
            None => ((start + len / 2.0) / cfg.sample_dt).floor() * cfg.sample_dt,
            Some(_) => snap(start + len / 2.0, cfg.sample_dt),
        };
        let pass = make(ca)?;
        let sat = j % cfg.n_satellites;
        if let Some(last) = per_sat[sat].last() {
            if last.pass_end >= pass.pass_start {
                // the only satellite free to take over would still be busy
                return Err(Error::CoverageGap {
                    at_s: prev.map_or(0.0, |p| p.pass_end.max(0.0)),
                });
            }
        }
        per_sat[sat].push(pass);
        prev = Some(pass);
        j += 1;
        if pass.pass_end >= cfg.duration_s {
            return Ok(per_sat);
        }
    }
}

/// Generates a covered multi-satellite trace. Pure function of `cfg`.
pub fn gen_trace_set(cfg: &TraceGenConfig) -> Result<TraceSet> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let per_sat = schedule_passes(cfg, &mut rng)?;
    let noise = Normal::new(cfg.noise_mean, cfg.noise_std)
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;

    let n = cfg.n_samples();
    let mut satellites: Vec<SatelliteTrace> = per_sat
        .into_iter()
        .enumerate()
        .map(|(i, passes)| SatelliteTrace {
            id: SatId(i as u32),
            passes,
            samples: Samples {
                throughput_mbps: Vec::with_capacity(n),
                elevation_deg: Vec::with_capacity(n),
                visible: Vec::with_capacity(n),
            },
        })
        .collect();

    for i in 0..n {
        let t = i as f64 * cfg.sample_dt;
        for sat in satellites.iter_mut() {
            let eps = noise.sample(&mut rng);
            let active = sat.passes.iter().find(|p| p.contains(t));
            let nearest = active.or_else(|| {
                sat.passes.iter().min_by(|a, b| {
                    let da = (a.closest_approach_time - t).abs();
                    let db = (b.closest_approach_time - t).abs();
                    da.total_cmp(&db)
                })
            });
            let elevation = nearest.map_or(0.0, |p| quantize6(p.elevation_deg(t)));
            let visible = active.is_some() && elevation >= cfg.min_elevation_deg;
            let throughput = match active {
                Some(p) if visible => {
                    quantize6(super::free_space_throughput(p, t, cfg.alpha, cfg.b_max_mbps, eps))
                }
                _ => 0.0,
            };
            sat.samples.throughput_mbps.push(throughput);
            sat.samples.elevation_deg.push(elevation);
            sat.samples.visible.push(visible);
        }
    }

    for i in 0..n {
        if !satellites.iter().any(|s| s.samples.visible[i]) {
            return Err(Error::CoverageGap {
                at_s: i as f64 * cfg.sample_dt,
            });
        }
    }

    TraceSet::new(
        cfg.sample_dt,
        satellites,
        TraceMeta {
            config: Some(cfg.clone()),
            min_elevation_deg: Some(cfg.min_elevation_deg),
            obstructions: Vec::new(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, duration: f64) -> TraceGenConfig {
        TraceGenConfig {
            n_satellites: n,
            duration_s: duration,
            ..Default::default()
        }
    }

    #[test]
    fn two_satellites_cover_four_minutes() {
        let t = gen_trace_set(&small(2, 240.0)).unwrap();
        assert_eq!(t.n_samples(), 240);
        for i in 0..t.n_samples() {
            let ts = i as f64 * t.sample_dt;
            assert!(!t.visible_satellites(ts).unwrap().is_empty(), "gap at {ts}");
        }
    }

    #[test]
    fn same_seed_is_identical() {
        let a = gen_trace_set(&small(3, 300.0)).unwrap();
        let b = gen_trace_set(&small(3, 300.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_changes_noise() {
        let a = gen_trace_set(&small(2, 120.0)).unwrap();
        let b = gen_trace_set(&TraceGenConfig {
            seed: 7,
            ..small(2, 120.0)
        })
        .unwrap();
        assert_ne!(
            a.satellites[0].samples.throughput_mbps,
            b.satellites[0].samples.throughput_mbps
        );
    }

    #[test]
    fn single_satellite_cannot_cover_long_scenario() {
        let err = gen_trace_set(&small(1, 900.0)).unwrap_err();
        match err {
            Error::CoverageGap { at_s } => assert!(at_s > 0.0 && at_s < 900.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_satellite_fits_inside_one_pass() {
        let cfg = TraceGenConfig {
            first_pass_phase: 0.0,
            ..small(1, 100.0)
        };
        assert!(gen_trace_set(&cfg).is_ok());
    }

    #[test]
    fn rejects_invalid_config() {
        for cfg in [
            TraceGenConfig { b_max_mbps: 0.0, ..Default::default() },
            TraceGenConfig { sample_dt: 0.0, ..Default::default() },
            TraceGenConfig { n_satellites: 0, ..Default::default() },
            TraceGenConfig { duration_s: -1.0, ..Default::default() },
            TraceGenConfig { max_cross_track_km: 5000.0, ..Default::default() },
        ] {
            assert!(matches!(gen_trace_set(&cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn visibility_respects_mask_and_zero_rate() {
        let t = gen_trace_set(&small(4, 600.0)).unwrap();
        for s in &t.satellites {
            for i in 0..t.n_samples() {
                if s.samples.visible[i] {
                    assert!(s.samples.elevation_deg[i] >= 25.0);
                } else {
                    assert_eq!(s.samples.throughput_mbps[i], 0.0);
                }
            }
        }
    }

    fn noiseless(seed: u64) -> TraceSet {
        gen_trace_set(&TraceGenConfig {
            noise_mean: 0.0,
            noise_std: 0.0,
            seed,
            ..small(3, 600.0)
        })
        .unwrap()
    }

    #[test]
    fn noiseless_peak_is_at_closest_approach() {
        for seed in 0..5 {
            let t = noiseless(seed);
            for s in &t.satellites {
                for p in &s.passes {
                    if p.pass_start < 0.0 || p.pass_end > t.duration() {
                        continue;
                    }
                    let lo = (p.pass_start / t.sample_dt).ceil() as usize;
                    let hi = ((p.pass_end / t.sample_dt).floor() as usize).min(t.n_samples() - 1);
                    let tp = &s.samples.throughput_mbps;
                    let argmax = (lo..=hi).max_by(|&a, &b| tp[a].total_cmp(&tp[b]).then(b.cmp(&a))).unwrap();
                    assert_eq!(argmax, t.sample_index(p.closest_approach_time));
                }
            }
        }
    }

    #[test]
    fn noiseless_throughput_decays_away_from_peak() {
        let t = noiseless(3);
        for s in &t.satellites {
            for p in &s.passes {
                let ca = t.sample_index(p.closest_approach_time.max(0.0));
                let tp = &s.samples.throughput_mbps;
                let vis = &s.samples.visible;
                for i in ca..t.n_samples() - 1 {
                    if vis[i] && vis[i + 1] && p.contains(i as f64 + 1.0) {
                        assert!(tp[i + 1] <= tp[i]);
                    }
                }
                for i in (1..=ca.min(t.n_samples() - 1)).rev() {
                    if vis[i] && vis[i - 1] && p.contains(i as f64 - 1.0) {
                        assert!(tp[i - 1] <= tp[i]);
                    }
                }
            }
        }
    }
}
