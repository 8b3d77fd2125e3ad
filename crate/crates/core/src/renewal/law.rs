use crate::error::{param, Result};

/// Inter-renewal law with survival function `F̄(k) = (1 + k)^(-beta)` on
/// `k ∈ {1, 2, ...}`.
///
/// The tail is regularly varying with index `beta` and constant `C_F = 1`,
/// and `k f(k) / F̄(k) → beta`, so the hazard-type ratio stays bounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenewalLaw {
    beta: f64,
}

impl RenewalLaw {
    /// Builds the law; `beta` must lie in the open interval `(0, 1/2)`.
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 0.5) {
            return param(format!("beta must lie in (0, 1/2), got {beta}"));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Tail constant `C_F` in `F̄(x) ~ C_F x^(-beta)`.
    pub fn tail_constant(&self) -> f64 {
        1.0
    }

    /// `F̄(k) = P(T > k)`.
    pub fn survival(&self, k: u64) -> f64 {
        (1.0 + k as f64).powf(-self.beta)
    }

    /// `F(k) = P(T <= k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        // 1 - (1+k)^-beta without cancellation near k = 0
        -(-self.beta * (k as f64).ln_1p()).exp_m1()
    }

    /// `f(k) = F̄(k-1) - F̄(k)`; zero for `k = 0`.
    pub fn mass(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let kf = k as f64;
        // k^-beta (1 - (k/(k+1))^beta), stable for large k
        kf.powf(-self.beta) * -(-self.beta * (1.0 / kf).ln_1p()).exp_m1()
    }

    /// `max_{1<=k<=upto} k f(k) / F̄(k)`.
    pub fn max_hazard_ratio(&self, upto: u64) -> f64 {
        (1..=upto)
            .map(|k| k as f64 * self.mass(k) / self.survival(k))
            .fold(0.0, f64::max)
    }

    /// Closed-form bound on `sup_k k f(k) / F̄(k)`.
    ///
    /// `k f(k)/F̄(k) = k ((1 + 1/k)^beta - 1) <= beta` by concavity.
    pub fn hazard_ratio_bound(&self) -> f64 {
        self.beta
    }
}
