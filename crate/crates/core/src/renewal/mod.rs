//! Discrete heavy-tailed renewal processes: the inter-renewal law, exact
//! tables for one process and for the intersection of two, and samplers.

pub mod constants;
pub mod convolve;
pub mod io;
pub mod law;
pub mod sample;
pub mod tables;

pub use constants::{asymptotic_u, scaling_b, theta_rho};
pub use law::RenewalLaw;
pub use sample::{
    intersect_sorted, sample_interarrival, sample_renewal_path, sample_window_set, WindowSampler, WindowSet,
};
pub use tables::RenewalTables;

/// Builds the default law `F̄(k) = (1 + k)^(-beta)`.
pub fn make_renewal_law(beta: f64) -> crate::Result<RenewalLaw> {
    RenewalLaw::new(beta)
}

/// Builds the exact tables up to `horizon`.
pub fn build_tables(law: &RenewalLaw, horizon: usize) -> crate::Result<RenewalTables> {
    RenewalTables::build(law, horizon)
}
