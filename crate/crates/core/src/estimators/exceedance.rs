//! Block-maxima exceedance rates, running maxima and block counts.

use serde::{Deserialize, Serialize};

use super::blocks::BlockScheme;
use super::record::EstimateRecord;
use crate::stats::{binomial_se, poisson_dispersion, DispersionTest};

/// Number of blocks of `x` (as cut by `scheme`) whose maximum exceeds
/// `threshold`.
pub fn exceeding_blocks(x: &[f64], scheme: &BlockScheme, threshold: f64) -> u64 {
    assert!(x.len() >= scheme.covered(), "path shorter than the block scheme");
    (0..scheme.k).filter(|&j| x[scheme.block(j)].iter().any(|&v| v > threshold)).count() as u64
}

/// Streaming estimate of `k_n P(max over a block > b y)`.
///
/// Per path the count `c` of exceeding blocks is recorded. The estimate is
/// the mean of `c`; the naive standard error treats all blocks as
/// independent Bernoulli trials, the clustered one uses the spread of `c`
/// across paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockExceedance {
    pub scheme: BlockScheme,
    pub b: f64,
    pub y: f64,
    pub paths: u64,
    pub sum: u64,
    pub sum_sq: u64,
}

impl BlockExceedance {
    pub fn new(scheme: BlockScheme, b: f64, y: f64) -> Self {
        Self { scheme, b, y, paths: 0, sum: 0, sum_sq: 0 }
    }

    pub fn observe(&mut self, x: &[f64]) {
        let c = exceeding_blocks(x, &self.scheme, self.b * self.y);
        self.paths += 1;
        self.sum += c;
        self.sum_sq += c * c;
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.scheme, other.scheme);
        self.paths += other.paths;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Record with target `theta y^{-α}` when `theta` is given.
    pub fn finish(&self, alpha: f64, theta: Option<f64>) -> EstimateRecord {
        let paths = self.paths.max(1) as f64;
        let k = self.scheme.k as f64;
        let estimate = self.sum as f64 / paths;
        let p = estimate / k;
        let naive = k * binomial_se(p, self.paths * self.scheme.k);
        let mean_sq = self.sum_sq as f64 / paths;
        let var = if self.paths > 1 { (mean_sq - estimate * estimate).max(0.0) * paths / (paths - 1.0) } else { 0.0 };
        let mut r = EstimateRecord::new("block_exceedance_rate", estimate, naive, self.paths)
            .with_y(self.y)
            .with_clustered_se((var / paths).sqrt());
        if let Some(rho) = self.scheme.rho {
            r = r.with_rho(rho);
        }
        if let Some(theta) = theta {
            r = r.with_target(theta * self.y.powf(-alpha), "theta_rho*y^-alpha");
        }
        if self.sum == 0 {
            r = r.flag("degenerate-ci");
        }
        r
    }

    /// `estimate ± 2 clustered_se`.
    pub fn interval(record: &EstimateRecord) -> (f64, f64) {
        let se = record.clustered_se.unwrap_or(record.se);
        (record.estimate - 2.0 * se, record.estimate + 2.0 * se)
    }
}

/// `k_n P(block max > b y)` over a batch of stored paths.
pub fn block_exceedance_rate<'a>(
    paths: impl IntoIterator<Item = &'a [f64]>,
    scheme: BlockScheme,
    b: f64,
    y: f64,
    alpha: f64,
    theta: Option<f64>,
) -> EstimateRecord {
    let mut acc = BlockExceedance::new(scheme, b, y);
    for x in paths {
        acc.observe(x);
    }
    acc.finish(alpha, theta)
}

/// Streaming `P(max_k x_k <= b x)` over a grid of `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningMax {
    pub b: f64,
    pub grid: Vec<f64>,
    pub paths: u64,
    pub below: Vec<u64>,
}

impl RunningMax {
    pub fn new(b: f64, grid: &[f64]) -> Self {
        Self { b, grid: grid.to_vec(), paths: 0, below: vec![0; grid.len()] }
    }

    pub fn observe(&mut self, x: &[f64]) {
        let max = x.iter().copied().fold(0.0, f64::max);
        self.paths += 1;
        for (c, &g) in self.below.iter_mut().zip(&self.grid) {
            if max <= self.b * g {
                *c += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.grid, other.grid);
        self.paths += other.paths;
        for (a, b) in self.below.iter_mut().zip(&other.below) {
            *a += b;
        }
    }

    /// One record per grid point, target `exp(-θ x^{-α})`.
    pub fn finish(&self, alpha: f64, theta: f64) -> Vec<EstimateRecord> {
        self.grid
            .iter()
            .zip(&self.below)
            .map(|(&g, &c)| {
                let p = c as f64 / self.paths.max(1) as f64;
                EstimateRecord::new("running_max_cdf", p, binomial_se(p, self.paths), self.paths)
                    .with_y(g)
                    .with_target((-theta * g.powf(-alpha)).exp(), "exp(-theta*x^-alpha)")
            })
            .collect()
    }
}

/// Running-maximum CDF over a batch of stored paths.
pub fn running_max_cdf<'a>(
    paths: impl IntoIterator<Item = &'a [f64]>,
    b: f64,
    alpha: f64,
    theta: f64,
    grid: &[f64],
) -> Vec<EstimateRecord> {
    let mut acc = RunningMax::new(b, grid);
    for x in paths {
        acc.observe(x);
    }
    acc.finish(alpha, theta)
}

/// Per-path numbers of exceeding blocks, for the Poisson check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub scheme: BlockScheme,
    pub threshold: f64,
    pub counts: Vec<u64>,
}

impl BlockCounts {
    pub fn new(scheme: BlockScheme, threshold: f64) -> Self {
        Self { scheme, threshold, counts: Vec::new() }
    }

    pub fn observe(&mut self, x: &[f64]) {
        self.counts.push(exceeding_blocks(x, &self.scheme, self.threshold));
    }

    pub fn merge(&mut self, other: &Self) {
        self.counts.extend_from_slice(&other.counts);
    }

    pub fn dispersion(&self) -> Option<DispersionTest> {
        poisson_dispersion(&self.counts)
    }

    /// Mean count against `mean_target` and the dispersion p-value.
    pub fn finish(&self, mean_target: f64) -> Vec<EstimateRecord> {
        let n = self.counts.len() as u64;
        let Some(t) = self.dispersion() else {
            return vec![EstimateRecord::new("block_count_mean", 0.0, 0.0, n)
                .with_target(mean_target, "theta*y^-alpha")
                .flag("degenerate-ci")];
        };
        vec![
            EstimateRecord::new("block_count_mean", t.mean, (t.variance / n as f64).sqrt(), n)
                .with_target(mean_target, "theta*y^-alpha"),
            EstimateRecord::new("block_count_dispersion_p", t.p_value, 0.0, n)
                .flag(&format!("index={:.4},dof={}", t.statistic / t.dof as f64, t.dof)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::blocks::make_block_scheme;

    #[test]
    fn counts_blocks_not_exceedances() {
        let s = make_block_scheme(16, 0.5).unwrap();
        let mut x = vec![0.0; 16];
        x[0] = 5.0;
        x[1] = 5.0;
        x[9] = 2.0;
        assert_eq!(exceeding_blocks(&x, &s, 1.0), 2);
        assert_eq!(exceeding_blocks(&x, &s, 3.0), 1);
        assert_eq!(exceeding_blocks(&x, &s, 5.0), 0);
    }

    #[test]
    fn rate_and_standard_errors() {
        let s = make_block_scheme(16, 0.5).unwrap();
        let mut acc = BlockExceedance::new(s, 1.0, 1.0);
        let mut x = vec![0.0; 16];
        acc.observe(&x);
        x[0] = 2.0;
        x[4] = 2.0;
        acc.observe(&x);
        let r = acc.finish(0.7, Some(0.5));
        assert_eq!(r.estimate, 1.0);
        // per-path counts 0 and 2
        assert!((r.clustered_se.unwrap() - 1.0).abs() < 1e-12);
        // 2 of 8 blocks
        assert!((r.se - 4.0 * (0.25f64 * 0.75 / 8.0).sqrt()).abs() < 1e-12);
        assert_eq!(r.target, Some(0.5));
        assert_eq!(r.rho, Some(0.5));

        let mut a = BlockExceedance::new(s, 1.0, 1.0);
        let mut b = a.clone();
        a.observe(&[0.0; 16]);
        b.observe(&x);
        a.merge(&b);
        assert_eq!(a, acc);
    }

    #[test]
    fn huge_threshold_is_degenerate() {
        let s = make_block_scheme(16, 0.5).unwrap();
        let x = vec![1.0; 16];
        let r = block_exceedance_rate([x.as_slice()], s, 1.0, 1e9, 0.7, Some(0.5));
        assert_eq!(r.estimate, 0.0);
        assert!(r.note.contains("degenerate"));
        assert!((r.target.unwrap() - 0.5 * 1e9f64.powf(-0.7)).abs() < 1e-18);
    }

    #[test]
    fn running_max_is_monotone() {
        let paths: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.1, 0.0]).collect();
        let grid = [0.5, 1.0, 2.0, 4.0, 1e9];
        let rows = running_max_cdf(paths.iter().map(|p| p.as_slice()), 1.0, 0.7, 0.3, &grid);
        assert_eq!(rows.len(), 5);
        assert!(rows.windows(2).all(|w| w[0].estimate <= w[1].estimate));
        assert_eq!(rows[4].estimate, 1.0);
        assert!((rows[1].target.unwrap() - (-0.3f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn block_counts_rows() {
        let s = make_block_scheme(16, 0.5).unwrap();
        let mut acc = BlockCounts::new(s, 1.0);
        for i in 0..400 {
            let mut x = vec![0.0; 16];
            for j in 0..(i % 3) {
                x[4 * j] = 2.0;
            }
            acc.observe(&x);
        }
        let rows = acc.finish(1.0);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].estimate - 399.0 / 400.0).abs() < 1e-12);
        // counts 0,1,2 are underdispersed relative to Poisson
        assert!(rows[1].estimate < 0.05);
    }
}
