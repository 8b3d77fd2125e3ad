//! Exact finite-window quantities and their Monte Carlo checks.

use rand::Rng;

use super::record::EstimateRecord;
use crate::error::{param, Result};
use crate::renewal::tables::kahan_sum;
use crate::renewal::{RenewalLaw, RenewalTables, WindowSampler};
use crate::stats::binomial_se;

/// `Σ_{j=0}^{d-1} F̄*(j)` with `F̄*(0) = 1`.
pub fn finite_block_constant(tables: &RenewalTables, d: usize) -> Result<f64> {
    if d == 0 || d > tables.horizon() + 1 {
        return param(format!("block length {d} outside 1..={}", tables.horizon() + 1));
    }
    Ok(kahan_sum(tables.fbar_star()[..d].iter().copied()))
}

/// Outcome of [`hit_probability_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct HitCheck {
    /// Monte Carlo `P(R_{n,1} ∩ {1..d} ≠ ∅)` against the exact `w_d / w_n`.
    pub single: EstimateRecord,
    /// Exact single-window probability over `d^{1-β} C_F / ((1-β) w_n)`.
    pub single_asymptote_ratio: f64,
    /// Monte Carlo `P(R_{n,1} ∩ R_{n,2} ∩ {1..d} ≠ ∅)` against the exact
    /// `(1/w_n²) Σ_{k<d} F̄*(k)`.
    pub pair: EstimateRecord,
    /// Exact pair probability over `qF2 d / w_n²`.
    pub pair_asymptote_ratio: f64,
}

impl HitCheck {
    pub fn records(&self) -> Vec<EstimateRecord> {
        let ratio = |name: &str, v: f64, count: u64| {
            EstimateRecord::new(name, v, 0.0, count).with_target(1.0, "asymptote")
        };
        vec![
            self.single.clone(),
            ratio("hit_single_asymptote_ratio", self.single_asymptote_ratio, 1),
            self.pair.clone(),
            ratio("hit_pair_asymptote_ratio", self.pair_asymptote_ratio, 1),
        ]
    }
}

/// Exact pair-hit probability `(1/w_n²) Σ_{k<d} F̄*(k)`.
pub fn pair_hit_exact(tables: &RenewalTables, n: u64, d: usize) -> Result<f64> {
    let w = window_w(tables, n)?;
    Ok(finite_block_constant(tables, d)? / (w * w))
}

fn window_w(tables: &RenewalTables, n: u64) -> Result<f64> {
    if n as usize > tables.horizon() {
        return param(format!("n = {n} beyond the table horizon {}", tables.horizon()));
    }
    Ok(tables.w()[n as usize])
}

pub fn hit_probability_check<R: Rng + ?Sized>(
    law: &RenewalLaw,
    tables: &RenewalTables,
    n: u64,
    d: u64,
    reps: u64,
    rng: &mut R,
) -> Result<HitCheck> {
    if d == 0 || d > n {
        return param(format!("need 1 <= d <= n, got d = {d}, n = {n}"));
    }
    if reps == 0 {
        return param("need at least one draw");
    }
    let sampler = WindowSampler::new(law, n)?;
    let w_n = sampler.w_n();
    let beta = law.beta();
    let (mut single, mut pair) = (0u64, 0u64);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..reps {
        a.clear();
        b.clear();
        sampler.sample_into(rng, d, &mut a);
        sampler.sample_into(rng, d, &mut b);
        if !a.is_empty() {
            single += 1;
        }
        if crate::renewal::sample::count_common(&a, &b) > 0 {
            pair += 1;
        }
    }
    let single_exact = sampler.w(d) / w_n;
    let pair_exact = pair_hit_exact(tables, n, d as usize)?;
    let single_asym = law.tail_constant() * (d as f64).powf(1.0 - beta) / ((1.0 - beta) * w_n);
    let pair_asym = tables.qf2() * d as f64 / (w_n * w_n);
    let p1 = single as f64 / reps as f64;
    let p2 = pair as f64 / reps as f64;
    Ok(HitCheck {
        single: EstimateRecord::new("hit_single", p1, binomial_se(p1, reps), reps)
            .with_target(single_exact, "w_d/w_n"),
        single_asymptote_ratio: single_exact / single_asym,
        pair: EstimateRecord::new("hit_pair", p2, binomial_se(p2, reps), reps)
            .with_target(pair_exact, "sum_{k<d} Fbar*(k)/w_n^2"),
        pair_asymptote_ratio: pair_exact / pair_asym,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn tables() -> RenewalTables {
        RenewalTables::build(&RenewalLaw::new(0.3).unwrap(), 5000).unwrap()
    }

    #[test]
    fn finite_block_constant_small_cases() {
        let t = tables();
        assert_eq!(finite_block_constant(&t, 1).unwrap(), 1.0);
        assert!((finite_block_constant(&t, 2).unwrap() - (1.0 + t.fbar_star()[1])).abs() < 1e-15);
        assert!(finite_block_constant(&t, 0).is_err());
        assert!(finite_block_constant(&t, 5002).is_err());
        // F̄*(1) = 1 - f(1)², the only way to meet at time 1
        let f1 = t.law().mass(1);
        assert!((t.fbar_star()[1] - (1.0 - f1 * f1)).abs() < 1e-15);
    }

    #[test]
    fn pair_exact_at_full_window_and_ratio_trend() {
        let t = tables();
        let n = 2000u64;
        let w = t.w()[n as usize];
        let full: f64 = t.fbar_star()[..n as usize].iter().sum::<f64>() / (w * w);
        assert!((pair_hit_exact(&t, n, n as usize).unwrap() - full).abs() < 1e-14);
        let ratio = |d: usize| pair_hit_exact(&t, n, d).unwrap() / (t.qf2() * d as f64 / (w * w));
        assert!((ratio(1000) - 1.0).abs() < (ratio(10) - 1.0).abs());
        assert!(pair_hit_exact(&t, 6000, 10).is_err());
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let t = tables();
        let law = *t.law();
        let mut rng = stream(8, 0, "hit");
        let h = hit_probability_check(&law, &t, 1000, 100, 200_000, &mut rng).unwrap();
        assert!(h.single.z.unwrap().abs() < 4.0, "{:?}", h.single);
        assert!(h.pair.z.unwrap().abs() < 4.0, "{:?}", h.pair);
        assert_eq!(h.records().len(), 4);
        assert!(hit_probability_check(&law, &t, 100, 200, 10, &mut rng).is_err());
    }
}
