//! Reset elements (Clegg integrator, GFORE, GSORE, CgLp, CgLp-PID) and the
//! sampled reset law.

mod controller;
mod elements;

pub use controller::{rho_from_bandwidth, ResetController, TimeRegularization};
pub use elements::{
    cglp_first_order, cglp_pid, clegg, gfore, gsore, CgLpPidParams, ResetElement,
};
