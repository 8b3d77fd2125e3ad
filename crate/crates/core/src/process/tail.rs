//! The spectral tail process `Θ_k = 1{k ∈ τ⁽¹⁾ ∩ τ⁽²⁾}` of two independent
//! renewal processes started at 0.

use rand::Rng;

use crate::renewal::sample::sample_interarrival;
use crate::renewal::RenewalLaw;

/// Common renewal times within `{0..L}`; `common[0] == 0`.
///
/// For the two-sided version `negative` holds the common times of a second,
/// independent pair, read as lags `-k`; it also starts with 0, the shared
/// origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailProcessSample {
    pub horizon: u64,
    pub common: Vec<u64>,
    pub negative: Option<Vec<u64>>,
}

impl TailProcessSample {
    /// `Σ_k Θ_k` over all observed lags, counting the origin once.
    pub fn total_count(&self) -> usize {
        self.common.len() + self.negative.as_ref().map_or(0, |neg| neg.len() - 1)
    }
}

/// Walks two renewal paths from 0 in lockstep and records their common points.
pub(crate) fn common_renewals<R: Rng + ?Sized>(law: &RenewalLaw, horizon: u64, rng: &mut R, out: &mut Vec<u64>) {
    out.clear();
    out.push(0);
    let (mut a, mut b) = (0u64, 0u64);
    loop {
        if a <= b {
            a = a.saturating_add(sample_interarrival(law, rng));
        } else {
            b = b.saturating_add(sample_interarrival(law, rng));
        }
        // any later common point is at least the leading position
        if a.max(b) > horizon {
            break;
        }
        if a == b {
            out.push(a);
        }
    }
}

pub fn sample_tail_process<R: Rng + ?Sized>(law: &RenewalLaw, horizon: u64, rng: &mut R) -> TailProcessSample {
    let mut common = Vec::new();
    common_renewals(law, horizon, rng, &mut common);
    TailProcessSample { horizon, common, negative: None }
}

/// Two-sided tail process: an independent pair supplies the negative lags.
pub fn sample_two_sided_tail<R: Rng + ?Sized>(law: &RenewalLaw, horizon: u64, rng: &mut R) -> TailProcessSample {
    let mut common = Vec::new();
    common_renewals(law, horizon, rng, &mut common);
    let mut negative = Vec::new();
    common_renewals(law, horizon, rng, &mut negative);
    TailProcessSample { horizon, common, negative: Some(negative) }
}
