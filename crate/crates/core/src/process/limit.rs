//! The limiting marked point process `Σ_ℓ δ_{(G_ℓ (Γ_ℓ/θ)^{-1/α}, U_ℓ)}`
//! with geometric cluster sizes `G_ℓ`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitPoint {
    /// `θ^{1/α} Γ_ℓ^{-1/α}`.
    pub height: f64,
    /// Cluster size, geometric on `{1, 2, ...}`.
    pub mark: u64,
    /// Uniform location in `(0, 1)`.
    pub location: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitProcessSample {
    pub points: Vec<LimitPoint>,
}

/// Geometric variable on `{1, 2, ...}` with success probability `q`.
pub fn sample_geometric<R: Rng + ?Sized>(q: f64, rng: &mut R) -> u64 {
    if q >= 1.0 {
        return 1;
    }
    let v = 1.0 - rng.gen::<f64>();
    1 + (v.ln() / (-q).ln_1p()).floor() as u64
}

pub fn sample_limit_point_process<R: Rng + ?Sized>(
    theta: f64,
    alpha: f64,
    qf2: f64,
    arrivals: usize,
    rng: &mut R,
) -> Result<LimitProcessSample> {
    if arrivals < 1 {
        return param("the limit process needs at least one arrival");
    }
    if !(theta > 0.0) || !(alpha > 0.0) || !(qf2 > 0.0 && qf2 <= 1.0) {
        return param("theta, alpha must be positive and qF2 in (0, 1]");
    }
    let scale = theta.powf(1.0 / alpha);
    let mut g = 0.0;
    let points = (0..arrivals)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            g += e;
            LimitPoint {
                height: scale * g.powf(-1.0 / alpha),
                mark: sample_geometric(qf2, rng),
                location: rng.gen_range(f64::EPSILON..1.0),
            }
        })
        .collect();
    Ok(LimitProcessSample { points })
}

/// `θ^{1/α} Σ_ℓ G_ℓ Γ_ℓ^{-1/α}`, the limiting partial sum at `t = 1`.
///
/// The series is cut after `arrivals` terms; the remainder is replaced by
/// its mean `θ^{1/α} (1/q) ∫_{Γ}^{∞} x^{-1/α} dx`, which it tracks closely
/// once `Γ` is large.
pub fn sample_limit_sum<R: Rng + ?Sized>(theta: f64, alpha: f64, qf2: f64, arrivals: usize, rng: &mut R) -> f64 {
    let inv = 1.0 / alpha;
    let mut g = 0.0;
    let mut s = 0.0;
    for _ in 0..arrivals {
        let e: f64 = Exp1.sample(rng);
        g += e;
        s += sample_geometric(qf2, rng) as f64 * g.powf(-inv);
    }
    let remainder = g.powf(1.0 - inv) / (inv - 1.0) / qf2;
    theta.powf(inv) * (s + remainder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn heights_decrease_and_marks_are_positive() {
        let mut rng = stream(1, 0, "limit");
        let s = sample_limit_point_process(0.3, 0.7, 0.8, 500, &mut rng).unwrap();
        assert!(s.points.windows(2).all(|w| w[1].height < w[0].height));
        assert!(s.points.iter().all(|p| p.mark >= 1 && p.location > 0.0 && p.location < 1.0));
        assert!(sample_limit_point_process(0.3, 0.7, 0.8, 0, &mut rng).is_err());
    }

    #[test]
    fn geometric_mean() {
        let mut rng = stream(2, 0, "geo");
        let q = 0.35;
        let n = 200_000;
        let mean = (0..n).map(|_| sample_geometric(q, &mut rng) as f64).sum::<f64>() / n as f64;
        let sd = (1.0 - q).sqrt() / q / (n as f64).sqrt();
        assert!((mean - 1.0 / q).abs() < 4.0 * sd);
    }
}
