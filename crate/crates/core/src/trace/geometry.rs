//! Straight-chord pass geometry and the free-space throughput model.

use serde::{Deserialize, Serialize};

/// One satellite pass over the client, modelled as straight-line motion at
/// constant altitude with a fixed cross-track offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassGeometry {
    /// Seconds from scenario start at which the slant range is minimal.
    pub closest_approach_time: f64,
    pub altitude_km: f64,
    /// Lateral offset of the ground track from the client.
    pub cross_track_km: f64,
    /// Along-track speed.
    pub speed_kms: f64,
    /// Visibility window, seconds from scenario start.
    pub pass_start: f64,
    pub pass_end: f64,
}

impl PassGeometry {
    /// Builds a pass whose window is the interval where elevation stays at or
    /// above `min_elevation_deg`. Returns `None` when the ground track never
    /// reaches that elevation.
    pub fn with_mask(
        closest_approach_time: f64,
        altitude_km: f64,
        cross_track_km: f64,
        speed_kms: f64,
        min_elevation_deg: f64,
    ) -> Option<Self> {
        let max_horizontal = altitude_km / min_elevation_deg.to_radians().tan();
        if cross_track_km.abs() >= max_horizontal {
            return None;
        }
        let half = (max_horizontal.powi(2) - cross_track_km.powi(2)).sqrt() / speed_kms;
        Some(Self {
            closest_approach_time,
            altitude_km,
            cross_track_km,
            speed_kms,
            pass_start: closest_approach_time - half,
            pass_end: closest_approach_time + half,
        })
    }

    pub fn duration(&self) -> f64 {
        self.pass_end - self.pass_start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.pass_start && t <= self.pass_end
    }

    /// Slant range at closest approach.
    pub fn min_range_km(&self) -> f64 {
        self.altitude_km.hypot(self.cross_track_km)
    }

    /// Ground distance from the client to the sub-satellite point.
    pub fn horizontal_km(&self, t: f64) -> f64 {
        let along = self.speed_kms * (t - self.closest_approach_time);
        self.cross_track_km.hypot(along)
    }

    pub fn slant_range_km(&self, t: f64) -> f64 {
        slant_range(self, t)
    }

    pub fn elevation_deg(&self, t: f64) -> f64 {
        self.altitude_km.atan2(self.horizontal_km(t)).to_degrees()
    }
}

/// Client-to-satellite distance at `t` in km.
pub fn slant_range(pass: &PassGeometry, t: f64) -> f64 {
    let along = pass.speed_kms * (t - pass.closest_approach_time);
    (pass.altitude_km.powi(2) + pass.cross_track_km.powi(2) + along.powi(2)).sqrt()
}

/// Throughput in Mbps under free-space path loss: the peak rate
/// `alpha * b_max` scaled by `(d_min / d_t)^2`, plus `noise`, clamped at zero.
pub fn free_space_throughput(
    pass: &PassGeometry,
    t: f64,
    alpha: f64,
    b_max_mbps: f64,
    noise_mbps: f64,
) -> f64 {
    let d_min = pass.min_range_km();
    let d_t = slant_range(pass, t);
    let ratio = (d_min * d_min) / (d_t * d_t);
    (alpha * b_max_mbps * ratio + noise_mbps).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pass(alt: f64, cross: f64) -> PassGeometry {
        PassGeometry {
            closest_approach_time: 100.0,
            altitude_km: alt,
            cross_track_km: cross,
            speed_kms: 7.6,
            pass_start: 0.0,
            pass_end: 200.0,
        }
    }

    #[test]
    fn slant_range_at_closest_approach_is_altitude() {
        assert_eq!(slant_range(&pass(550.0, 0.0), 100.0), 550.0);
    }

    #[test]
    fn slant_range_after_hundred_seconds() {
        let r = slant_range(&pass(550.0, 0.0), 200.0);
        let expect = (550.0f64 * 550.0 + 760.0 * 760.0).sqrt();
        assert!((r - expect).abs() < 1e-9, "{r}");
        assert!((r - 938.136).abs() < 1e-3);
    }

    #[test]
    fn slant_range_is_symmetric() {
        let p = pass(550.0, 120.0);
        for x in [0.5, 3.0, 17.25, 80.0] {
            assert_eq!(slant_range(&p, 100.0 + x), slant_range(&p, 100.0 - x));
        }
    }

    #[test]
    fn peak_throughput_is_alpha_b_max() {
        let p = pass(550.0, 0.0);
        assert_eq!(free_space_throughput(&p, 100.0, 1.0, 20.0, 0.0), 20.0);
    }

    #[test]
    fn double_distance_quarters_throughput() {
        // d_t = 2 d_min when along-track offset is sqrt(3) * altitude.
        let p = pass(550.0, 0.0);
        let t = 100.0 + 550.0 * 3f64.sqrt() / 7.6;
        let b = free_space_throughput(&p, t, 0.5, 20.0, 0.0);
        assert!((b - 2.5).abs() < 1e-9, "{b}");
    }

    #[test]
    fn negative_noise_clamps_to_zero() {
        let p = pass(550.0, 0.0);
        assert_eq!(free_space_throughput(&p, 100.0, 1.0, 1.0, -2.0), 0.0);
    }

    #[test]
    fn mask_window_matches_elevation() {
        let p = PassGeometry::with_mask(50.0, 550.0, 100.0, 7.6, 25.0).unwrap();
        assert!((p.elevation_deg(p.pass_start) - 25.0).abs() < 1e-9);
        assert!((p.elevation_deg(p.pass_end) - 25.0).abs() < 1e-9);
        assert!(p.elevation_deg(50.0) > 75.0);
        assert!(PassGeometry::with_mask(0.0, 550.0, 5000.0, 7.6, 25.0).is_none());
    }
}
