use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::renewal::convolve::{direct_sum, solve_online};
use crate::renewal::law::RenewalLaw;

/// Largest negative round-off tolerated in the deconvolution before it is
/// reported as a numerical failure.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// Exact numeric tables of the renewal process and of the intersection of two
/// independent copies.
///
/// * `u(k) = P(k ∈ τ)`, the renewal mass function,
/// * `v(k) = u(k)²`, the renewal mass function of `τ⁽¹⁾ ∩ τ⁽²⁾`,
/// * `fstar`, the (defective) inter-arrival law of the intersection, obtained
///   by deconvolving `v`,
/// * `fbar_star(j) = 1 - Σ_{k<=j} fstar(k)`, which decreases to `q_{F,2}`,
/// * `w(n) = Σ_{k<n} F̄(k)`.
#[derive(Clone, Debug)]
pub struct RenewalTables {
    law: RenewalLaw,
    horizon: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    fstar: Vec<f64>,
    fbar_star: Vec<f64>,
    w: Vec<f64>,
    qf2: f64,
    qf2_error: f64,
    tail_correction: f64,
    asym_const: f64,
    clamped: usize,
}

/// `1 / (C_F Γ(β) Γ(1-β)) = sin(πβ) / (π C_F)`.
pub fn asymptotic_constant(law: &RenewalLaw) -> f64 {
    (PI * law.beta()).sin() / (PI * law.tail_constant())
}

impl RenewalTables {
    /// Builds all tables up to `horizon`.
    pub fn build(law: &RenewalLaw, horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return param(format!("table horizon must be at least 2, got {horizon}"));
        }
        let n = horizon;
        let f: Vec<f64> = (0..=n as u64).map(|k| law.mass(k)).collect();
        let u = solve_online(&f, n, |k, s| if k == 0 { 1.0 } else { s });
        let v: Vec<f64> = u.iter().map(|x| x * x).collect();

        let mut clamped = 0usize;
        let mut worst = 0.0f64;
        let mut fstar = solve_online(&v, n, |k, s| {
            if k == 0 {
                return 0.0;
            }
            let val = v[k] - s;
            if val < 0.0 {
                worst = worst.min(val);
                clamped += 1;
                0.0
            } else {
                val
            }
        });
        if worst < -NEGATIVITY_TOLERANCE {
            return Err(Error::Numerical(format!(
                "intersection inter-arrival mass went negative ({worst:e}) beyond tolerance {NEGATIVITY_TOLERANCE:e}"
            )));
        }
        if clamped > 0 {
            log::warn!("clamped {clamped} slightly negative intersection masses to zero (worst {worst:e})");
        }
        fstar[0] = 0.0;

        let mut fbar_star = Vec::with_capacity(n + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        fbar_star.push(1.0);
        for &m in &fstar[1..] {
            kahan_add(&mut sum, &mut comp, m);
            fbar_star.push(1.0 - sum);
        }

        let mut w = Vec::with_capacity(n + 1);
        let (mut ws, mut wc) = (0.0f64, 0.0f64);
        w.push(0.0);
        for k in 0..n as u64 {
            kahan_add(&mut ws, &mut wc, law.survival(k));
            w.push(ws);
        }

        let asym_const = asymptotic_constant(law);
        let beta = law.beta();
        let head = kahan_sum(v.iter().copied());
        let tail_correction = asym_const * asym_const * (n as f64).powf(2.0 * beta - 1.0) / (1.0 - 2.0 * beta);
        let qf2 = 1.0 / (head + tail_correction);
        // Σ_{k<=N} v(k) undercounts the series, so 1/head is a strict upper
        // bound for q; the tail term is at most doubled as long as
        // u(k) <= √2 times its asymptote beyond N.
        let qf2_error = 1.0 / head - qf2;
        if !(qf2 > 0.0 && qf2 < 1.0) {
            return Err(Error::Numerical(format!("q_F,2 = {qf2} outside (0, 1)")));
        }

        Ok(Self {
            law: *law,
            horizon: n,
            u,
            v,
            fstar,
            fbar_star,
            w,
            qf2,
            qf2_error,
            tail_correction,
            asym_const,
            clamped,
        })
    }

    /// Reassembles tables from persisted columns, recomputing the derived
    /// quantities (`w`, `q_{F,2}`) from the law.
    pub(crate) fn from_columns(law: &RenewalLaw, u: Vec<f64>, fstar: Vec<f64>) -> Result<Self> {
        let horizon = u.len().checked_sub(1).ok_or_else(|| Error::Format("empty table".into()))?;
        if horizon < 2 || fstar.len() != u.len() {
            return Err(Error::Format("table columns have inconsistent lengths".into()));
        }
        let v: Vec<f64> = u.iter().map(|x| x * x).collect();
        let mut fbar_star = Vec::with_capacity(horizon + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        fbar_star.push(1.0);
        for &m in &fstar[1..] {
            kahan_add(&mut sum, &mut comp, m);
            fbar_star.push(1.0 - sum);
        }
        let mut w = Vec::with_capacity(horizon + 1);
        let (mut ws, mut wc) = (0.0f64, 0.0f64);
        w.push(0.0);
        for k in 0..horizon as u64 {
            kahan_add(&mut ws, &mut wc, law.survival(k));
            w.push(ws);
        }
        let asym_const = asymptotic_constant(law);
        let beta = law.beta();
        let head = kahan_sum(v.iter().copied());
        let tail_correction =
            asym_const * asym_const * (horizon as f64).powf(2.0 * beta - 1.0) / (1.0 - 2.0 * beta);
        let qf2 = 1.0 / (head + tail_correction);
        Ok(Self {
            law: *law,
            horizon,
            u,
            v,
            fstar,
            fbar_star,
            w,
            qf2,
            qf2_error: 1.0 / head - qf2,
            tail_correction,
            asym_const,
            clamped: 0,
        })
    }

    pub fn law(&self) -> &RenewalLaw {
        &self.law
    }

    pub fn beta(&self) -> f64 {
        self.law.beta()
    }

    /// Largest tabulated index `N`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `fstar[0]` is zero; `fstar[k]` for `k = 1..=N`.
    pub fn fstar(&self) -> &[f64] {
        &self.fstar
    }

    pub fn fbar_star(&self) -> &[f64] {
        &self.fbar_star
    }

    /// `w[n] = Σ_{k<n} F̄(k)` for `n = 0..=N` (`w[0] = 0`).
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn qf2(&self) -> f64 {
        self.qf2
    }

    /// Half-width of the band known to contain the exact `q_{F,2}`.
    pub fn qf2_error(&self) -> f64 {
        self.qf2_error
    }

    /// Analytic estimate of `Σ_{k>N} u(k)²`.
    pub fn tail_correction(&self) -> f64 {
        self.tail_correction
    }

    /// `1 / (C_F Γ(β) Γ(1-β))`.
    pub fn asym_const(&self) -> f64 {
        self.asym_const
    }

    /// Number of deconvolution entries clamped from tiny negative values.
    pub fn clamped_entries(&self) -> usize {
        self.clamped
    }

    /// `max_n |u(n) - Σ_{k=1}^{n} f(k) u(n-k)|`, evaluated by direct summation.
    pub fn renewal_identity_residual(&self) -> f64 {
        let f: Vec<f64> = (0..=self.horizon as u64).map(|k| self.law.mass(k)).collect();
        (1..=self.horizon)
            .map(|n| (self.u[n] - direct_sum(&self.u, &f, n)).abs())
            .fold(0.0, f64::max)
    }

    /// `max_n |v(n) - Σ_{k=1}^{n} fstar(k) v(n-k)|`, evaluated by direct summation.
    pub fn deconvolution_residual(&self) -> f64 {
        (1..=self.horizon)
            .map(|n| (self.v[n] - direct_sum(&self.v, &self.fstar, n)).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ_{k>L} u(k)²`: exact over the table, analytic beyond it.
    pub fn intersection_residual(&self, l: usize) -> f64 {
        if l >= self.horizon {
            let beta = self.beta();
            return self.asym_const.powi(2) * (l as f64).powf(2.0 * beta - 1.0) / (1.0 - 2.0 * beta);
        }
        kahan_sum(self.v[l + 1..].iter().copied()) + self.tail_correction
    }

    /// Smallest horizon `L` with `Σ_{k>L} u(k)² < target`. Beyond the table
    /// the analytic tail `c² L^{2β-1}/(1-2β)` of [`Self::intersection_residual`]
    /// is inverted.
    pub fn horizon_for_residual(&self, target: f64) -> usize {
        let mut suffix = self.tail_correction;
        if suffix >= target {
            let beta = self.beta();
            let l = (target * (1.0 - 2.0 * beta) / self.asym_const.powi(2)).powf(1.0 / (2.0 * beta - 1.0));
            let mut l = (l.ceil() as usize).max(self.horizon);
            while self.intersection_residual(l) >= target {
                l += 1 + l / 1_000_000;
            }
            return l;
        }
        let mut l = self.horizon;
        while l > 0 {
            let next = suffix + self.v[l];
            if next >= target {
                return l;
            }
            suffix = next;
            l -= 1;
        }
        0
    }

    /// Renewal function `Σ_{k=1}^{n} u(k)`.
    pub fn renewal_function(&self, n: usize) -> f64 {
        kahan_sum(self.u[1..=n.min(self.horizon)].iter().copied())
    }
}

pub(crate) fn kahan_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let y = x - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

pub(crate) fn kahan_sum(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for x in it {
        kahan_add(&mut s, &mut c, x);
    }
    s
}
