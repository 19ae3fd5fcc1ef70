/// Equal split of what background traffic leaves of `capacity_mbps` among
/// `n_active` downloaders.
pub fn allocate_shares(capacity_mbps: f64, n_active: usize, background_fraction: f64) -> Vec<f64> {
    debug_assert!(capacity_mbps >= 0.0);
    debug_assert!((0.0..1.0).contains(&background_fraction));
    if n_active == 0 {
        return Vec::new();
    }
    vec![per_user_share(capacity_mbps, n_active, background_fraction); n_active]
}

pub(crate) fn per_user_share(capacity_mbps: f64, n_active: usize, background_fraction: f64) -> f64 {
    capacity_mbps * (1.0 - background_fraction) / n_active as f64
}
