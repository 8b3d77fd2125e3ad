//! Conditional exceedance profile behind the anticlustering condition.

use serde::{Deserialize, Serialize};

use super::record::EstimateRecord;

/// Streaming estimate of
/// `P(max_{t+l <= s < t+d} x_s > b x | x_t > b y)` for every lag `l` in
/// `lags`.
///
/// Conditioning times are all `t` with `t + d <= n` (so the whole window
/// lies inside the path). The ratio estimator pools over times and paths;
/// the clustered standard error treats each path as one unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcProfile {
    pub d: u64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    pub lags: Vec<u64>,
    pub paths: u64,
    cond: f64,
    cond_sq: f64,
    events: Vec<f64>,
    events_sq: Vec<f64>,
    cross: Vec<f64>,
}

/// Fewer conditioning events than this flags the row as low-power.
pub const MIN_CONDITIONS: f64 = 30.0;

impl AcProfile {
    pub fn new(d: u64, b: f64, x: f64, y: f64, lags: &[u64]) -> Self {
        let z = vec![0.0; lags.len()];
        Self {
            d,
            b,
            x,
            y,
            lags: lags.to_vec(),
            paths: 0,
            cond: 0.0,
            cond_sq: 0.0,
            events: z.clone(),
            events_sq: z.clone(),
            cross: z,
        }
    }

    pub fn observe(&mut self, path: &[f64]) {
        let n = path.len() as u64;
        let hi: Vec<u64> = (0..n).filter(|&s| path[s as usize] > self.b * self.x).collect();
        let mut c = 0.0;
        let mut e = vec![0.0; self.lags.len()];
        if n >= self.d {
            for t in 0..=n - self.d {
                if path[t as usize] <= self.b * self.y {
                    continue;
                }
                c += 1.0;
                let end = t + self.d;
                for (ev, &l) in e.iter_mut().zip(&self.lags) {
                    let i = hi.partition_point(|&s| s < t + l);
                    if i < hi.len() && hi[i] < end {
                        *ev += 1.0;
                    }
                }
            }
        }
        self.paths += 1;
        self.cond += c;
        self.cond_sq += c * c;
        for i in 0..e.len() {
            self.events[i] += e[i];
            self.events_sq[i] += e[i] * e[i];
            self.cross[i] += c * e[i];
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.lags, other.lags);
        self.paths += other.paths;
        self.cond += other.cond;
        self.cond_sq += other.cond_sq;
        for i in 0..self.lags.len() {
            self.events[i] += other.events[i];
            self.events_sq[i] += other.events_sq[i];
            self.cross[i] += other.cross[i];
        }
    }

    /// One record per lag; `y` in the record is the lag.
    pub fn finish(&self) -> Vec<EstimateRecord> {
        let paths = self.paths as f64;
        self.lags
            .iter()
            .enumerate()
            .map(|(i, &lag)| {
                let mut r = if self.cond == 0.0 {
                    EstimateRecord::new("ac_profile", 0.0, 0.0, 1).flag("low-power")
                } else {
                    let p = self.events[i] / self.cond;
                    let naive = (p * (1.0 - p) / self.cond).sqrt();
                    // Σ (e_i - p c_i)² over paths, delta method for a ratio
                    let ss = self.events_sq[i] - 2.0 * p * self.cross[i] + p * p * self.cond_sq;
                    let scale = if paths > 1.0 { paths / (paths - 1.0) } else { 1.0 };
                    let clustered = (ss.max(0.0) * scale).sqrt() / self.cond;
                    let r = EstimateRecord::new("ac_profile", p, naive, self.cond as u64).with_clustered_se(clustered);
                    if self.cond < MIN_CONDITIONS {
                        r.flag("low-power")
                    } else {
                        r
                    }
                };
                r = r.with_y(lag as f64).flag(&format!("d={},x={},y={}", self.d, self.x, self.y));
                r
            })
            .collect()
    }
}
