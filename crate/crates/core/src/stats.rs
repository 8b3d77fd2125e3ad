//! Goodness-of-fit helpers used by the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Result of a χ² goodness-of-fit test after pooling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `(observed, expected)` of every pooled bin.
    pub bins: Vec<(u64, f64)>,
}

/// Minimum expected count per bin.
pub const MIN_EXPECTED: f64 = 5.0;

/// χ² test of `observed` cell counts against cell probabilities `probs`.
///
/// The cells must partition the sample space (`probs` sums to one, the last
/// cell usually being an open tail). Bins are merged from the tail towards
/// the head until each holds an expected count of at least
/// [`MIN_EXPECTED`]; a short remainder at the head joins its neighbour.
/// Returns `None` when fewer than two bins survive.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Option<ChiSquareTest> {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return None;
    }
    let total = total as f64;
    let mut bins: Vec<(u64, f64)> = Vec::new();
    let (mut o, mut e) = (0u64, 0.0);
    for (&obs, &p) in observed.iter().zip(probs).rev() {
        o += obs;
        e += p * total;
        if e >= MIN_EXPECTED {
            bins.push((o, e));
            o = 0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    bins.reverse();
    if bins.len() < 2 {
        return None;
    }
    let statistic = bins.iter().map(|&(o, e)| (o as f64 - e).powi(2) / e).sum::<f64>();
    let dof = bins.len() - 1;
    let p_value = chi_square_sf(statistic, dof as f64);
    Some(ChiSquareTest { statistic, dof, p_value, bins })
}

pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(x)
}

/// Histogram of positive integer samples into cells `1..=max_cell-1` and a
/// tail cell `>= max_cell`.
pub fn histogram(values: impl IntoIterator<Item = u64>, max_cell: u64) -> Vec<u64> {
    let mut h = vec![0u64; max_cell as usize];
    for v in values {
        assert!(v >= 1, "cell values start at 1");
        h[(v.min(max_cell) - 1) as usize] += 1;
    }
    h
}

/// Cell probabilities of Geometric(`q`) on `{1, 2, ...}` for the cells of
/// [`histogram`].
pub fn geometric_cells(q: f64, max_cell: u64) -> Vec<f64> {
    let mut cells: Vec<f64> = (1..max_cell).map(|k| q * (1.0 - q).powi(k as i32 - 1)).collect();
    cells.push((1.0 - q).powi(max_cell as i32 - 1));
    cells
}

/// Poisson dispersion test: `D = Σ (c_i - c̄)² / c̄` is approximately
/// χ²(N - 1) under a Poisson law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionTest {
    pub mean: f64,
    pub variance: f64,
    pub statistic: f64,
    pub dof: usize,
    /// Two-sided.
    pub p_value: f64,
}

pub fn poisson_dispersion(counts: &[u64]) -> Option<DispersionTest> {
    let n = counts.len();
    if n < 2 {
        return None;
    }
    let mean = counts.iter().sum::<u64>() as f64 / n as f64;
    if mean == 0.0 {
        return None;
    }
    let ss = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>();
    let statistic = ss / mean;
    let dof = n - 1;
    let upper = chi_square_sf(statistic, dof as f64);
    let p_value = (2.0 * upper.min(1.0 - upper)).min(1.0);
    Some(DispersionTest { mean, variance: ss / dof as f64, statistic, dof, p_value })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub distance: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    KsTest { distance: d, p_value: kolmogorov_sf(lambda) }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Large-sample χ² test of a mean vector against `mu`.
///
/// Feed one vector per independent draw; the statistic
/// `D (x̄ - μ)ᵀ S⁻¹ (x̄ - μ)` uses the empirical covariance `S` and is
/// asymptotically χ² with `dim` degrees of freedom. Unlike a sum of per-cell
/// z², it stays valid when the coordinates of a draw are correlated.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanVectorTest {
    dim: usize,
    draws: u64,
    sum: Vec<f64>,
    cross: Vec<f64>,
}

impl MeanVectorTest {
    pub fn new(dim: usize) -> Self {
        Self { dim, draws: 0, sum: vec![0.0; dim], cross: vec![0.0; dim * dim] }
    }

    pub fn observe(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.dim);
        self.draws += 1;
        for i in 0..self.dim {
            self.sum[i] += v[i];
            if v[i] != 0.0 {
                for j in 0..self.dim {
                    self.cross[i * self.dim + j] += v[i] * v[j];
                }
            }
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.draws as f64).collect()
    }

    /// `None` when the covariance is singular.
    pub fn finish(&self, mu: &[f64]) -> Option<ChiSquareTest> {
        let k = self.dim;
        let d = self.draws as f64;
        let mean = self.mean();
        let mut cov = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                cov[i * k + j] = (self.cross[i * k + j] - d * mean[i] * mean[j]) / (d - 1.0);
            }
        }
        let diff: Vec<f64> = mean.iter().zip(mu).map(|(m, u)| m - u).collect();
        let z = cholesky_solve(&mut cov, k, &diff)?;
        let statistic = d * diff.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        Some(ChiSquareTest { statistic, dof: k, p_value: chi_square_sf(statistic, k as f64), bins: Vec::new() })
    }
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, destroyed).
fn cholesky_solve(a: &mut [f64], k: usize, b: &[f64]) -> Option<Vec<f64>> {
    for j in 0..k {
        let original = a[j * k + j];
        let mut diag = original;
        for p in 0..j {
            diag -= a[j * k + p] * a[j * k + p];
        }
        if !(diag > 1e-12 * original) {
            return None;
        }
        let l = diag.sqrt();
        a[j * k + j] = l;
        for i in j + 1..k {
            let mut v = a[i * k + j];
            for p in 0..j {
                v -= a[i * k + p] * a[j * k + p];
            }
            a[i * k + j] = v / l;
        }
    }
    let mut y = b.to_vec();
    for i in 0..k {
        for p in 0..i {
            y[i] -= a[i * k + p] * y[p];
        }
        y[i] /= a[i * k + i];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            y[i] -= a[p * k + i] * y[p];
        }
        y[i] /= a[i * k + i];
    }
    Some(y)
}

/// `sqrt(p (1 - p) / n)`.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of a non-empty sample.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn chi_square_pools_the_tail() {
        let probs = [0.5, 0.3, 0.15, 0.04, 0.01];
        let observed = [50, 30, 15, 4, 1];
        let t = chi_square_gof(&observed, &probs).unwrap();
        // expected 50, 30, 15, 5 (= 4 + 1)
        assert_eq!(t.bins.len(), 4);
        assert_eq!(t.bins[3].0, 5);
        assert!((t.bins[3].1 - 5.0).abs() < 1e-12);
        assert!(t.statistic.abs() < 1e-12);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_head_remainder_joins_neighbour() {
        let probs = [0.01, 0.49, 0.5];
        let t = chi_square_gof(&[1, 49, 50], &probs).unwrap();
        assert_eq!(t.bins.len(), 2);
        assert_eq!(t.bins[0].0, 50);
        assert!(chi_square_gof(&[0, 0], &[0.5, 0.5]).is_none());
    }

    #[test]
    fn chi_square_survival_reference() {
        // χ²(2) survival is exp(-x/2)
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn geometric_cells_partition() {
        let c = geometric_cells(0.3, 12);
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(histogram([1, 2, 2, 40], 4), vec![1, 2, 0, 1]);
    }

    #[test]
    fn dispersion_of_poisson_draws() {
        let mut rng = stream(1, 0, "disp");
        let pois = rand_distr::Poisson::new(0.7).unwrap();
        let counts: Vec<u64> = (0..5000).map(|_| rand_distr::Distribution::sample(&pois, &mut rng) as u64).collect();
        let t = poisson_dispersion(&counts).unwrap();
        assert!(t.p_value > 0.001, "{t:?}");
        // overdispersed: mixture of zeros and large counts
        let counts: Vec<u64> = (0..5000).map(|i| if i % 10 == 0 { 7 } else { 0 }).collect();
        assert!(poisson_dispersion(&counts).unwrap().p_value < 1e-6);
    }

    #[test]
    fn ks_same_and_shifted() {
        let mut rng = stream(2, 0, "ks");
        let a: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>() + 0.2).collect();
        assert!(ks_two_sample(&a, &b).distance < 0.05);
        assert!(ks_two_sample(&a, &c).p_value < 1e-10);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).distance, 0.0);
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn mean_vector_test_handles_correlated_coordinates() {
        let mut rng = stream(3, 0, "hotelling");
        let mut t = MeanVectorTest::new(3);
        for _ in 0..20_000 {
            let common: f64 = rng.gen();
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            t.observe(&[common + a, common + 0.1 * b, common]);
        }
        let ok = t.finish(&[1.0, 0.55, 0.5]).unwrap();
        assert!(ok.p_value > 0.001, "{ok:?}");
        assert_eq!(ok.dof, 3);
        assert!(t.finish(&[1.0, 0.56, 0.5]).unwrap().p_value < 1e-6);
        let mut singular = MeanVectorTest::new(2);
        singular.observe(&[1.0, 1.0]);
        singular.observe(&[2.0, 2.0]);
        assert!(singular.finish(&[1.5, 1.5]).is_none());
    }

    #[test]
    fn cholesky_reference() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&mut a, 2, &[2.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn small_helpers() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((binomial_se(0.5, 100) - 0.05).abs() < 1e-15);
    }
}
