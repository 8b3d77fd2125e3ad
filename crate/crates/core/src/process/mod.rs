//! Samplers for the model path, the tail process and the limiting point
//! process.

pub mod limit;
pub mod path;
pub mod tail;
pub mod truncation;

pub use limit::{sample_geometric, sample_limit_point_process, sample_limit_sum, LimitPoint, LimitProcessSample};
pub use path::{partial_sum, sample_site_value, simulate_path, ContributingPair, PathSample, PathSimulator, SeriesConfig};
pub use tail::{sample_tail_process, sample_two_sided_tail, TailProcessSample};
pub use truncation::{default_truncation, window_normalizer, Regime, TruncationPolicy, TruncationWindow};
