//! Clusters of exceedances inside blocks.

use serde::{Deserialize, Serialize};

use super::blocks::BlockScheme;
use super::record::EstimateRecord;
use crate::stats::{chi_square_gof, geometric_cells, histogram, mean_se, median, ChiSquareTest};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    /// 0-based block index.
    pub block: u64,
    /// Exceedance times shifted so the first one is 0.
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    pub max: f64,
    /// `min(values) / max(values)`.
    pub flatness: f64,
}

impl ClusterRecord {
    pub fn size(&self) -> usize {
        self.times.len()
    }
}

/// One record per block whose maximum exceeds `threshold`.
pub fn extract_clusters(x: &[f64], scheme: &BlockScheme, threshold: f64) -> Vec<ClusterRecord> {
    assert!(threshold > 0.0, "threshold must be positive");
    let mut out = Vec::new();
    for j in 0..scheme.k {
        let range = scheme.block(j);
        let start = range.start;
        let (mut times, mut values) = (Vec::new(), Vec::new());
        for (t, &v) in x[range].iter().enumerate() {
            if v > threshold {
                times.push((start + t) as u64);
                values.push(v);
            }
        }
        if times.is_empty() {
            continue;
        }
        let first = times[0];
        times.iter_mut().for_each(|t| *t -= first);
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        let min = values.iter().copied().fold(f64::MAX, f64::min);
        out.push(ClusterRecord { block: j, times, values, max, flatness: min / max });
    }
    out
}

/// Pooled cluster sizes and flatness values.
///
/// Single-exceedance clusters have flatness 1 by definition and would mask
/// the trend, so flatness is only collected from clusters of size >= 2.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub sizes: Vec<u64>,
    pub flatness: Vec<f64>,
}

/// Largest explicit cell of the size histogram.
pub const SIZE_CELLS: u64 = 40;

impl ClusterSummary {
    pub fn observe(&mut self, x: &[f64], scheme: &BlockScheme, threshold: f64) {
        for c in extract_clusters(x, scheme, threshold) {
            self.push(&c);
        }
    }

    pub fn push(&mut self, c: &ClusterRecord) {
        self.sizes.push(c.size() as u64);
        if c.size() >= 2 {
            self.flatness.push(c.flatness);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.sizes.extend_from_slice(&other.sizes);
        self.flatness.extend_from_slice(&other.flatness);
    }

    pub fn size_test(&self, qf2: f64) -> Option<ChiSquareTest> {
        chi_square_gof(&histogram(self.sizes.iter().copied(), SIZE_CELLS), &geometric_cells(qf2, SIZE_CELLS))
    }

    pub fn median_flatness(&self) -> Option<f64> {
        median(&mut self.flatness.clone())
    }

    /// Mean size against `1/qF2`, the χ² p-value and the median flatness.
    pub fn finish(&self, qf2: f64) -> Vec<EstimateRecord> {
        let n = self.sizes.len() as u64;
        let sizes: Vec<f64> = self.sizes.iter().map(|&s| s as f64).collect();
        let (mean, se) = mean_se(&sizes);
        let mut rows = vec![EstimateRecord::new("cluster_size_mean", mean, se, n).with_target(1.0 / qf2, "1/qF2")];
        rows.push(match self.size_test(qf2) {
            Some(t) => EstimateRecord::new("cluster_size_gof_p", t.p_value, 0.0, n)
                .flag(&format!("chi2={:.3},dof={}", t.statistic, t.dof)),
            None => EstimateRecord::new("cluster_size_gof_p", f64::NAN, 0.0, n).flag("low-power"),
        });
        let flat_n = self.flatness.len() as u64;
        rows.push(match self.median_flatness() {
            Some(m) => EstimateRecord::new("cluster_flatness_median", m, 0.0, flat_n),
            None => EstimateRecord::new("cluster_flatness_median", f64::NAN, 0.0, flat_n).flag("low-power"),
        });
        rows
    }
}
