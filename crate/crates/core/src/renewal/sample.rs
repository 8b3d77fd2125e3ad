//! Exact samplers for inter-arrivals, renewal paths and the window sets
//! `R_n` of the triangular-array representation.

use rand::Rng;

use crate::error::{param, Result};
use crate::renewal::law::RenewalLaw;
use crate::renewal::tables::{kahan_add, RenewalTables};

/// Returned for inter-arrivals too large to represent on the integer grid;
/// far beyond any simulation horizon.
pub const SATURATED_GAP: u64 = 1 << 60;

const BOUNDARY_TOL: f64 = 1e-9;

/// Draws `T` with `P(T > k) = F̄(k)` by inversion: `T` is the smallest
/// `t >= 1` with `F̄(t) <= V`, `V` uniform on `(0, 1]`.
///
/// For the default family this is `ceil(V^(-1/β) - 1)`; candidates whose
/// fractional part sits near an integer boundary are settled by evaluating
/// the survival function directly.
pub fn sample_interarrival<R: Rng + ?Sized>(law: &RenewalLaw, rng: &mut R) -> u64 {
    let v = 1.0 - rng.gen::<f64>();
    invert_survival(law, v)
}

pub(crate) fn invert_survival(law: &RenewalLaw, v: f64) -> u64 {
    let x = v.powf(-1.0 / law.beta());
    if !(x < 1e15) {
        return SATURATED_GAP;
    }
    let y = x - 1.0;
    let t = y.ceil().max(1.0);
    let gap = t - y;
    let mut t = t as u64;
    if gap < BOUNDARY_TOL * x || gap > 1.0 - BOUNDARY_TOL * x {
        while t > 1 && law.survival(t - 1) <= v {
            t -= 1;
        }
        while law.survival(t) > v {
            t += 1;
        }
    }
    t
}

/// Renewal path `{start, start + T_1, start + T_1 + T_2, ...}` cut at `horizon`.
pub fn sample_renewal_path<R: Rng + ?Sized>(law: &RenewalLaw, start: u64, horizon: u64, rng: &mut R) -> Vec<u64> {
    let mut out = Vec::new();
    extend_renewal_path(law, start, horizon, rng, &mut out);
    out
}

/// Appends the renewal path started at `start` (inclusive) up to `horizon`.
pub(crate) fn extend_renewal_path<R: Rng + ?Sized>(
    law: &RenewalLaw,
    start: u64,
    horizon: u64,
    rng: &mut R,
    out: &mut Vec<u64>,
) {
    if start > horizon {
        return;
    }
    out.push(start);
    let mut t = start;
    loop {
        t = t.saturating_add(sample_interarrival(law, rng));
        if t > horizon {
            break;
        }
        out.push(t);
    }
}

/// Sorted intersection of two strictly increasing sequences.
pub fn intersect_sorted(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Number of common elements of two strictly increasing sequences.
pub(crate) fn count_common(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// One draw of the window set `R_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowSet {
    pub n: u64,
    pub horizon: u64,
    pub points: Vec<u64>,
}

impl WindowSet {
    /// Smallest point, which always lies in `{1, ..., n}`.
    pub fn first(&self) -> u64 {
        self.points[0]
    }
}

/// Sampler for the law of `R_n`: the stationary-delay renewal set conditioned
/// to hit `{1, ..., n}`.
///
/// The stationary delay puts mass `π(d) = F̄(d)` on `d ∈ {0, 1, ...}`. A
/// delay `d ∈ {1..n}` hits the window at `d`; delay `0` hits it at the first
/// inter-arrival `T_0` provided `T_0 <= n`; delays beyond `n` miss it. The
/// normalizer is therefore `F(n) + Σ_{d=1}^{n} F̄(d) = Σ_{k<n} F̄(k) = w_n`,
/// and the first point `K` of `R_n` has
///
/// ```text
/// P(K = k) = (f(k) + F̄(k)) / w_n = F̄(k - 1) / w_n,   k = 1..n,
/// ```
///
/// i.e. `P(K <= k) = w_k / w_n`. Given `K`, the remaining points are an
/// ordinary renewal path. Summing over the first point gives
/// `P(k ∈ R_n) = Σ_{j<=k} F̄(j-1) u(k-j) / w_n = 1 / w_n` for `k <= n`.
#[derive(Clone, Debug)]
pub struct WindowSampler {
    law: RenewalLaw,
    n: u64,
    /// `cum[k] = w_k` for `k = 0..=n`.
    cum: Vec<f64>,
}

impl WindowSampler {
    pub fn new(law: &RenewalLaw, n: u64) -> Result<Self> {
        if n < 1 {
            return param("window length must be at least 1");
        }
        let mut cum = Vec::with_capacity(n as usize + 1);
        let (mut s, mut c) = (0.0, 0.0);
        cum.push(0.0);
        for k in 0..n {
            kahan_add(&mut s, &mut c, law.survival(k));
            cum.push(s);
        }
        Ok(Self { law: *law, n, cum })
    }

    /// Reuses the `w` column of `tables` when it reaches `n`.
    pub fn from_tables(tables: &RenewalTables, n: u64) -> Result<Self> {
        if (n as usize) <= tables.horizon() && n >= 1 {
            return Ok(Self { law: *tables.law(), n, cum: tables.w()[..=n as usize].to_vec() });
        }
        Self::new(tables.law(), n)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn law(&self) -> &RenewalLaw {
        &self.law
    }

    /// `w_n`.
    pub fn w_n(&self) -> f64 {
        self.cum[self.n as usize]
    }

    /// `w_k` for `k <= n`.
    pub fn w(&self, k: u64) -> f64 {
        self.cum[k as usize]
    }

    /// Draws the first point `K ∈ {1..n}`.
    pub fn first_point<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let target = rng.gen::<f64>() * self.w_n();
        // smallest k >= 1 with w_k > target
        let k = self.cum[1..].partition_point(|&c| c <= target) + 1;
        k.min(self.n as usize) as u64
    }

    /// Appends the points of one draw of `R_n` that are `<= limit`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, limit: u64, out: &mut Vec<u64>) {
        let first = self.first_point(rng);
        extend_renewal_path(&self.law, first, limit, rng, out);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, horizon: u64) -> Result<WindowSet> {
        if horizon < self.n {
            return param(format!("horizon {horizon} shorter than window length {}", self.n));
        }
        let mut points = Vec::new();
        self.sample_into(rng, horizon, &mut points);
        Ok(WindowSet { n: self.n, horizon, points })
    }
}

/// Draws `R_n` cut at `horizon >= n`.
pub fn sample_window_set<R: Rng + ?Sized>(
    law: &RenewalLaw,
    tables: &RenewalTables,
    n: u64,
    horizon: u64,
    rng: &mut R,
) -> Result<WindowSet> {
    if horizon < n {
        return param(format!("horizon {horizon} shorter than window length {n}"));
    }
    debug_assert_eq!(law, tables.law());
    WindowSampler::from_tables(tables, n)?.sample(rng, horizon)
}
