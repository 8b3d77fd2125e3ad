//! Deterministic parallel replication.
//!
//! Replication `i` always draws from the stream keyed by `(seed, i, label)`,
//! and results are folded in index order, so the outcome does not depend on
//! the number of worker threads.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Replications evaluated per parallel round before folding.
pub const DEFAULT_CHUNK: u64 = 64;

pub struct Runner {
    pool: rayon::ThreadPool,
    chunk: u64,
}

impl Runner {
    /// `parallelism = 0` uses all available cores.
    pub fn new(parallelism: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot start {parallelism} workers: {e}")))?;
        Ok(Self { pool, chunk: DEFAULT_CHUNK })
    }

    pub fn with_chunk(mut self, chunk: u64) -> Result<Self> {
        if chunk == 0 {
            return param("chunk size must be positive");
        }
        self.chunk = chunk;
        Ok(self)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Evaluates `work(state, i)` for every `i` in `range` and calls
    /// `fold(i, result)` in increasing `i`. Each worker gets its own state
    /// from `init`.
    pub fn run<S, T, I, W, F>(&self, range: Range<u64>, init: I, work: W, mut fold: F)
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        W: Fn(&mut S, u64) -> T + Sync + Send,
        F: FnMut(u64, T),
    {
        let mut start = range.start;
        while start < range.end {
            let end = (start + self.chunk).min(range.end);
            let results: Vec<T> =
                self.pool.install(|| (start..end).into_par_iter().map_init(&init, |s, i| work(s, i)).collect());
            for (i, r) in (start..end).zip(results) {
                fold(i, r);
            }
            start = end;
        }
    }

    /// Collects `work(i)` in index order.
    pub fn map<T, W>(&self, range: Range<u64>, work: W) -> Vec<T>
    where
        T: Send,
        W: Fn(u64) -> T + Sync + Send,
    {
        let mut out = Vec::with_capacity((range.end - range.start) as usize);
        self.run(range, || (), |_, i| work(i), |_, r| out.push(r));
        out
    }
}

/// 64-bit FNV-1a over the bit patterns of `x`, as 16 hex digits.
pub fn path_digest(x: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationDigest {
    pub index: u64,
    pub digest: String,
}

/// Audit record tying every replication index to a digest of its output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationManifest {
    pub seed: u64,
    pub config: serde_json::Value,
    pub replications: Vec<ReplicationDigest>,
}

impl ReplicationManifest {
    pub fn new(seed: u64, config: serde_json::Value) -> Self {
        Self { seed, config, replications: Vec::new() }
    }

    pub fn push(&mut self, index: u64, x: &[f64]) {
        self.replications.push(ReplicationDigest { index, digest: path_digest(x) });
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read<R: std::io::Read>(input: R) -> Result<Self> {
        serde_json::from_reader(input).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Writes `k,x_k` rows with 1-based `k`.
pub fn write_path_csv<W: Write>(x: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "k,x_k")?;
    for (k, v) in x.iter().enumerate() {
        writeln!(out, "{},{v:?}", k + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn sums(threads: usize, chunk: u64) -> Vec<f64> {
        let runner = Runner::new(threads).unwrap().with_chunk(chunk).unwrap();
        let mut out = Vec::new();
        runner.run(
            0..203,
            || 0u64,
            |calls, i| {
                *calls += 1;
                let mut rng = stream(9, i, "t");
                (0..100).map(|_| rng.gen::<f64>()).sum::<f64>()
            },
            |i, v| {
                assert_eq!(i as usize, out.len());
                out.push(v)
            },
        );
        out
    }

    #[test]
    fn independent_of_threads_and_chunking() {
        let a = sums(1, 64);
        assert_eq!(a.len(), 203);
        assert_eq!(a, sums(3, 7));
        assert_eq!(a, sums(2, 1000));
        assert!(Runner::new(1).unwrap().with_chunk(0).is_err());
        let r = Runner::new(2).unwrap();
        assert_eq!(r.map(5..8, |i| i * 2), vec![10, 12, 14]);
    }

    #[test]
    fn manifest_round_trip_and_digests() {
        let mut m = ReplicationManifest::new(3, serde_json::json!({"n": 10}));
        m.push(0, &[0.0, 1.5]);
        m.push(1, &[0.0, 1.5000000001]);
        assert_ne!(m.replications[0].digest, m.replications[1].digest);
        assert_eq!(m.replications[0].digest, path_digest(&[0.0, 1.5]));
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert_eq!(ReplicationManifest::read(buf.as_slice()).unwrap(), m);
        assert!(ReplicationManifest::read(&b"{"[..]).is_err());
    }

    #[test]
    fn path_csv() {
        let mut buf = Vec::new();
        write_path_csv(&[0.0, 2.5], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,x_k\n1,0.0\n2,2.5\n");
    }
}
