//! Several clients sharing satellite capacity.

mod background;
mod centralized;
mod event;
mod share;

pub use background::{background_capacity_fraction, BackgroundProfile, BACKGROUND_CAP};
pub use centralized::{
    centralized_mpc_decide, CentralChoice, CentralResult, CentralUser, CentralizedMpc,
    CENTRALIZED_USER_CAP,
};
pub use event::{simulate_multi, Independent, MultiPolicy, MultiResult, MultiView, ShareEvent, UserResult};
pub use share::allocate_shares;
