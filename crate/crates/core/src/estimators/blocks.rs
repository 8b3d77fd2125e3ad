use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Partition of `1..=n` into `k` consecutive blocks of length `d`; the last
/// `n - k d` times are left out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockScheme {
    pub n: u64,
    /// `None` for schemes not of the form `d = floor(n^rho)`.
    pub rho: Option<f64>,
    pub d: u64,
    pub k: u64,
}

/// `d = floor(n^rho)`, `k = floor(n/d)`.
pub fn make_block_scheme(n: u64, rho: f64) -> Result<BlockScheme> {
    if n < 4 {
        return param(format!("block schemes need n >= 4, got {n}"));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return param(format!("rho must lie in (0, 1], got {rho}"));
    }
    // guard against n^rho landing just below an integer
    let raw = (n as f64).powf(rho);
    let mut d = raw.round() as u64;
    if (d as f64 - raw).abs() > 1e-9 * raw {
        d = raw.floor() as u64;
    }
    let d = d.clamp(1, n);
    Ok(BlockScheme { n, rho: Some(rho), d, k: n / d })
}

impl BlockScheme {
    /// Blocks of length `floor(n / ln n)`, used for running maxima.
    pub fn macroscopic(n: u64) -> Result<Self> {
        if n < 4 {
            return param(format!("block schemes need n >= 4, got {n}"));
        }
        let d = ((n as f64) / (n as f64).ln()).floor() as u64;
        Ok(Self::with_length(n, d.max(1)))
    }

    /// Blocks of length `floor(ln n)`, the microscopic end of the sweep.
    pub fn logarithmic(n: u64) -> Result<Self> {
        if n < 8 {
            return param(format!("logarithmic blocks need n >= 8, got {n}"));
        }
        Ok(Self::with_length(n, (n as f64).ln().floor() as u64))
    }

    pub fn with_length(n: u64, d: u64) -> Self {
        assert!(d >= 1 && d <= n);
        Self { n, rho: None, d, k: n / d }
    }

    /// Rejects schemes that cannot carry a block-maxima estimate: `d < 2` or a
    /// single block.
    pub fn require_mesoscopic(self) -> Result<Self> {
        if self.d < 2 {
            return param(format!("block length {} is below 2", self.d));
        }
        if self.k < 2 {
            return param("a single block degenerates to the running maximum");
        }
        Ok(self)
    }

    /// 0-based index range of block `j` (0-based).
    pub fn block(&self, j: u64) -> std::ops::Range<usize> {
        let start = (j * self.d) as usize;
        start..start + self.d as usize
    }

    /// The covered prefix `0..k d`.
    pub fn covered(&self) -> usize {
        (self.k * self.d) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = make_block_scheme(1000, 0.5).unwrap();
        assert_eq!((s.d, s.k), (31, 32));
        let s = make_block_scheme(100_000, 0.2).unwrap();
        assert_eq!((s.d, s.k), (10, 10_000));
        let s = make_block_scheme(1000, 1.0).unwrap();
        assert_eq!((s.d, s.k), (1000, 1));
        assert!(s.require_mesoscopic().is_err());
        assert_eq!(make_block_scheme(100, 0.5).unwrap().d, 10);
        assert_eq!(make_block_scheme(1_000_000, 0.5).unwrap().d, 1000);
    }

    #[test]
    fn invariants() {
        for n in [4u64, 17, 1000, 99_999] {
            for rho in [0.05, 0.3, 0.5, 0.77, 1.0] {
                let s = make_block_scheme(n, rho).unwrap();
                assert!(s.d >= 1 && s.k >= 1 && s.d * s.k <= n);
                assert_eq!(s.block(s.k - 1).end, s.covered());
            }
        }
        assert!(make_block_scheme(4, 0.1).unwrap().require_mesoscopic().is_err());
    }

    #[test]
    fn bad_parameters() {
        assert!(make_block_scheme(3, 0.5).is_err());
        assert!(make_block_scheme(100, 0.0).is_err());
        assert!(make_block_scheme(100, 1.5).is_err());
    }

    #[test]
    fn macroscopic_length() {
        let s = BlockScheme::macroscopic(100_000).unwrap();
        assert_eq!(s.d, 8685);
        assert_eq!(s.k, 11);
        assert_eq!(BlockScheme::logarithmic(100_000).unwrap().d, 11);
    }
}
