use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::trace::{grid_index, SatId, TraceSet};
use crate::{Error, Result};

/// Background traffic never takes more than this share of a satellite.
pub const BACKGROUND_CAP: f64 = 0.8;

/// Fraction of each satellite's capacity consumed by non-video users,
/// piecewise constant over fixed windows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BackgroundProfile {
    pub window_s: f64,
    pub duration_s: f64,
    /// Indexed by satellite position in the trace, then window.
    pub fractions: Vec<Vec<f64>>,
    pub sats: Vec<SatId>,
}

impl BackgroundProfile {
    /// No background load.
    pub fn none() -> Self {
        Self::default()
    }

    /// Each of `n_users` background users demands a uniform `[0,
    /// max_demand)` fraction of every satellite per 10 s window; demands are
    /// summed and capped.
    pub fn generate(trace: &TraceSet, n_users: usize, max_demand: f64, seed: u64) -> Self {
        if n_users == 0 || !(max_demand > 0.0) {
            return Self::none();
        }
        let window_s = 10.0;
        let duration_s = trace.duration();
        let n_windows = (duration_s / window_s).ceil().max(1.0) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6261_636b_6772_6e64);
        let sats: Vec<SatId> = trace.sat_ids().collect();
        let fractions = sats
            .iter()
            .map(|_| {
                (0..n_windows)
                    .map(|_| {
                        let total: f64 = (0..n_users).map(|_| rng.random_range(0.0..max_demand)).sum();
                        total.min(BACKGROUND_CAP)
                    })
                    .collect()
            })
            .collect();
        Self {
            window_s,
            duration_s,
            fractions,
            sats,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    fn series(&self, sat: SatId) -> Option<&[f64]> {
        let i = self.sats.iter().position(|&s| s == sat)?;
        Some(&self.fractions[i])
    }

    /// Lookup clamped to the first/last window.
    pub(crate) fn fraction_clamped(&self, sat: SatId, t: f64) -> f64 {
        match self.series(sat) {
            Some(f) if !f.is_empty() => f[grid_index(t, self.window_s).min(f.len() - 1)],
            _ => 0.0,
        }
    }

    /// Next window boundary strictly after `t`, or `None` when the load
    /// never changes again.
    pub(crate) fn next_change(&self, t: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let n = self.fractions.first().map_or(0, |f| f.len());
        let k = grid_index(t, self.window_s) + 1;
        (k < n).then_some(k as f64 * self.window_s)
    }
}

/// Background share of `sat` at `t`.
pub fn background_capacity_fraction(profile: &BackgroundProfile, sat: SatId, t: f64) -> Result<f64> {
    if profile.is_empty() {
        return Ok(0.0);
    }
    if !(t >= 0.0) || t >= profile.duration_s {
        return Err(Error::TimeOutOfRange {
            t,
            duration: profile.duration_s,
        });
    }
    profile
        .series(sat)
        .map(|_| profile.fraction_clamped(sat, t))
        .ok_or(Error::UnknownSatellite(sat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace() -> TraceSet {
        TraceSet::from_series(1.0, vec![vec![5.0; 95], vec![5.0; 95]]).unwrap()
    }

    #[test]
    fn no_users_no_load() {
        let p = BackgroundProfile::generate(&trace(), 0, 0.05, 3);
        assert_eq!(background_capacity_fraction(&p, SatId(1), 42.0).unwrap(), 0.0);
    }

    #[test]
    fn cap_binds() {
        let p = BackgroundProfile::generate(&trace(), 40, 0.1, 3);
        for w in &p.fractions {
            assert!(w.iter().all(|&f| f <= BACKGROUND_CAP));
            assert!(w.contains(&BACKGROUND_CAP));
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(
            BackgroundProfile::generate(&trace(), 5, 0.05, 9),
            BackgroundProfile::generate(&trace(), 5, 0.05, 9)
        );
        assert_ne!(
            BackgroundProfile::generate(&trace(), 5, 0.05, 9),
            BackgroundProfile::generate(&trace(), 5, 0.05, 10)
        );
    }

    #[test]
    fn piecewise_lookup() {
        let p = BackgroundProfile::generate(&trace(), 3, 0.05, 1);
        assert_eq!(p.fractions[0].len(), 10);
        let f = &p.fractions[1];
        assert_eq!(background_capacity_fraction(&p, SatId(1), 19.99).unwrap(), f[1]);
        assert_eq!(background_capacity_fraction(&p, SatId(1), 20.0).unwrap(), f[2]);
        assert!(background_capacity_fraction(&p, SatId(1), 95.0).is_err());
        assert_eq!(p.next_change(20.0), Some(30.0));
        assert_eq!(p.next_change(91.0), None);
    }
}
