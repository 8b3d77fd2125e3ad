//! Simulation of `X̃_{n,1..n}`, the series representation truncated to the
//! first `m` Poisson arrivals:
//!
//! ```text
//! X̃_{n,k} = w_n^{2/α} Σ_{1<=i1<i2<=m} (Γ_{i1} Γ_{i2})^{-1/α} 1{k ∈ R_{n,i1} ∩ R_{n,i2}}
//! ```
//!
//! with `Γ_i` standard Poisson arrival times and `R_{n,i}` i.i.d. window sets.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::process::truncation::{Regime, TruncationWindow};
use crate::renewal::{RenewalLaw, WindowSampler};
use crate::rng::{stream, Stream};

/// Everything needed to simulate one batch of paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    /// Number of Poisson arrivals retained.
    pub m: usize,
    pub seed: u64,
    pub regime: Regime,
}

impl SeriesConfig {
    /// Config with the default (geometric mean) truncation for `regime`.
    pub fn new(n: u64, alpha: f64, beta: f64, seed: u64, regime: Regime) -> Result<Self> {
        let law = RenewalLaw::new(beta)?;
        let m = TruncationWindow::new(n, alpha, &law, regime)?.at(0.5);
        let cfg = Self { n, alpha, beta, m, seed, regime };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_policy(self, policy: super::TruncationPolicy) -> Result<Self> {
        let window = TruncationWindow::new(self.n, self.alpha, &self.law(), self.regime)?;
        self.with_truncation(policy.level(&window))
    }

    pub fn with_truncation(mut self, m: usize) -> Result<Self> {
        self.m = m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return param("path length must be at least 2");
        }
        if self.m < 2 {
            return param("truncation level must be at least 2");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        RenewalLaw::new(self.beta)?;
        if let Regime::Mesoscopic { rho } = self.regime {
            if !(rho > 0.0 && rho <= 1.0) {
                return param(format!("mesoscopic rho must lie in (0, 1], got {rho}"));
            }
        }
        Ok(())
    }

    pub fn law(&self) -> RenewalLaw {
        RenewalLaw::new(self.beta).expect("validated")
    }
}

/// Pair of arrivals whose window sets intersect inside the path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributingPair {
    /// 1-based arrival indices, `i1 < i2`.
    pub i1: usize,
    pub i2: usize,
    /// 1-based times in `R_{n,i1} ∩ R_{n,i2} ∩ {1..n}`.
    pub points: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    /// `x[k]` is `X̃_{n,k+1}`.
    pub x: Vec<f64>,
    /// `Γ_1 < ... < Γ_{m+1}`.
    pub gamma: Vec<f64>,
    pub contributing_pairs: Option<Vec<ContributingPair>>,
}

/// Reusable simulator for one [`SeriesConfig`].
///
/// Pairwise intersections are found by bucketing every window point by time
/// and enumerating the windows sharing a bucket, which costs
/// `O(P log P + Σ_k c_k²)` for `P` points and `c_k` windows at time `k`.
#[derive(Clone, Debug)]
pub struct PathSimulator {
    config: SeriesConfig,
    sampler: WindowSampler,
    log_w_over_alpha: f64,
    points: Vec<u64>,
    keyed: Vec<u64>,
    log_weight: Vec<f64>,
}

/// Substream label of the path simulator.
pub const PATH_STREAM: &str = "path";

impl PathSimulator {
    pub fn new(config: SeriesConfig) -> Result<Self> {
        config.validate()?;
        if config.m >= u32::MAX as usize || config.n >= u32::MAX as u64 {
            return param("path length and truncation must fit in 32 bits");
        }
        let sampler = WindowSampler::new(&config.law(), config.n)?;
        let log_w_over_alpha = sampler.w_n().ln() / config.alpha;
        Ok(Self { config, sampler, log_w_over_alpha, points: Vec::new(), keyed: Vec::new(), log_weight: Vec::new() })
    }

    pub fn config(&self) -> &SeriesConfig {
        &self.config
    }

    pub fn w_n(&self) -> f64 {
        self.sampler.w_n()
    }

    /// Replication `index` of the batch keyed by the config seed.
    pub fn simulate_replication(&mut self, index: u64, diagnostics: bool) -> PathSample {
        let mut rng = stream(self.config.seed, index, PATH_STREAM);
        self.simulate(&mut rng, diagnostics)
    }

    pub fn simulate<R: Rng + ?Sized>(&mut self, rng: &mut R, diagnostics: bool) -> PathSample {
        let mut x = vec![0.0; self.config.n as usize];
        let (gamma, pairs) = self.simulate_into(rng, &mut x, diagnostics);
        PathSample { x, gamma, contributing_pairs: pairs }
    }

    /// Fills `x` (length `n`) and returns the arrivals and optional pair list.
    pub fn simulate_into<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        x: &mut [f64],
        diagnostics: bool,
    ) -> (Vec<f64>, Option<Vec<ContributingPair>>) {
        let SeriesConfig { n, m, alpha, .. } = self.config;
        assert_eq!(x.len(), n as usize);
        x.iter_mut().for_each(|v| *v = 0.0);

        let mut gamma = Vec::with_capacity(m + 1);
        let mut g = 0.0;
        for _ in 0..=m {
            let e: f64 = Exp1.sample(rng);
            g += e;
            gamma.push(g);
        }
        self.log_weight.clear();
        self.log_weight.extend(gamma[..m].iter().map(|g| self.log_w_over_alpha - g.ln() / alpha));

        self.keyed.clear();
        for i in 0..m {
            self.points.clear();
            self.sampler.sample_into(rng, n, &mut self.points);
            self.keyed.extend(self.points.iter().map(|&t| (t << 32) | i as u64));
        }
        self.keyed.sort_unstable();

        let mut pairs: BTreeMap<(usize, usize), Vec<u64>> = BTreeMap::new();
        let keyed = &self.keyed;
        let mut start = 0;
        while start < keyed.len() {
            let t = keyed[start] >> 32;
            let mut end = start + 1;
            while end < keyed.len() && keyed[end] >> 32 == t {
                end += 1;
            }
            if end - start >= 2 {
                let mut acc = 0.0;
                for a in start..end {
                    let ia = (keyed[a] & 0xFFFF_FFFF) as usize;
                    for b in a + 1..end {
                        let ib = (keyed[b] & 0xFFFF_FFFF) as usize;
                        acc += (self.log_weight[ia] + self.log_weight[ib]).exp();
                        if diagnostics {
                            pairs.entry((ia + 1, ib + 1)).or_default().push(t);
                        }
                    }
                }
                x[t as usize - 1] = acc;
            }
            start = end;
        }
        let pairs = diagnostics.then(|| {
            pairs.into_iter().map(|((i1, i2), points)| ContributingPair { i1, i2, points }).collect()
        });
        (gamma, pairs)
    }
}

/// Simulates one path from an explicit stream.
pub fn simulate_path(config: &SeriesConfig, rng: &mut Stream) -> Result<PathSample> {
    Ok(PathSimulator::new(*config)?.simulate(rng, false))
}

/// One draw of the single-site value `X̃_{n,k}` without simulating a path.
///
/// Each window set covers a fixed site independently with probability
/// `1/w_n`, so the covering arrivals form a binomial thinning of the `m`
/// indices. Given `Γ_{m+1}`, the retained `Γ_i/Γ_{m+1}` are the order
/// statistics of `m` uniforms, and a random subset of them is again a set of
/// i.i.d. uniforms. The result has exactly the law of any `x[k]` produced by
/// [`PathSimulator`] with the same `n`, `m`, `alpha`.
pub fn sample_site_value<R: Rng + ?Sized>(w_n: f64, m: usize, alpha: f64, rng: &mut R) -> f64 {
    let hits = Binomial::new(m as u64, 1.0 / w_n).expect("w_n >= 1").sample(rng) as usize;
    if hits < 2 {
        return 0.0;
    }
    let total: f64 = Gamma::new(m as f64 + 1.0, 1.0).expect("positive shape").sample(rng);
    let log_w = w_n.ln() / alpha;
    let lw: Vec<f64> = (0..hits)
        .map(|_| {
            let u = 1.0 - rng.gen::<f64>();
            log_w - (total * u).ln() / alpha
        })
        .collect();
    let mut acc = 0.0;
    for a in 0..hits {
        for b in a + 1..hits {
            acc += (lw[a] + lw[b]).exp();
        }
    }
    acc
}

/// `Σ_k x_k / b_n`.
pub fn partial_sum(path: &PathSample, alpha: f64, n: u64) -> Result<f64> {
    if path.x.len() as u64 != n {
        return param(format!("path has length {}, expected {n}", path.x.len()));
    }
    let b = crate::renewal::scaling_b(n as f64, alpha)?;
    Ok(path.x.iter().sum::<f64>() / b)
}
