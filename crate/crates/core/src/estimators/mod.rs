//! Reductions over replications and exact finite-window oracles.
//!
//! Accumulators follow one pattern: `observe` a path (or sample), `merge`
//! another accumulator, `finish` into [`EstimateRecord`] rows.

pub mod anticlustering;
pub mod blocks;
pub mod clusters;
pub mod exceedance;
pub mod oracles;
pub mod record;
pub mod tail;

pub use anticlustering::AcProfile;
pub use blocks::{make_block_scheme, BlockScheme};
pub use clusters::{extract_clusters, ClusterRecord, ClusterSummary};
pub use exceedance::{block_exceedance_rate, running_max_cdf, BlockCounts, BlockExceedance, RunningMax};
pub use oracles::{finite_block_constant, hit_probability_check, pair_hit_exact, HitCheck};
pub use record::{EstimateRecord, CSV_COLUMNS};
pub use tail::{candidate_index_estimate, two_sided_count_identity};

use crate::stats::ks_two_sample;

/// Two-sample KS comparison of partial sums with draws of the limit.
pub fn partial_sum_comparison(sums: &[f64], limit: &[f64]) -> Vec<EstimateRecord> {
    let t = ks_two_sample(sums, limit);
    let n = (sums.len() + limit.len()) as u64;
    vec![
        EstimateRecord::new("partial_sum_ks_distance", t.distance, 0.0, n),
        EstimateRecord::new("partial_sum_ks_p", t.p_value, 0.0, n),
    ]
}
