//! Online convolution for renewal-type recursions.
//!
//! Solves `y(n) = step(n, Σ_{j<n} y(j) a(n-j))` for a fully known kernel `a`
//! by divide and conquer: the left half of every range is finalized first and
//! its contribution to the right half is added with one FFT product. The total
//! cost is `O(N log² N)` instead of the `O(N²)` of the plain recursion.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const DIRECT_CUTOFF: usize = 128;

struct Planner {
    planner: FftPlanner<f64>,
    cache: HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl Planner {
    fn new() -> Self {
        Self { planner: FftPlanner::new(), cache: HashMap::new() }
    }

    fn plans(&mut self, len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        let planner = &mut self.planner;
        self.cache
            .entry(len)
            .or_insert_with(|| (planner.plan_fft_forward(len), planner.plan_fft_inverse(len)))
            .clone()
    }
}

/// Full linear convolution of `x` and `k` restricted to output indices
/// `[lo, hi)`; `out[i - lo] += (x * k)[i]`.
fn add_convolution(planner: &mut Planner, x: &[f64], k: &[f64], lo: usize, hi: usize, out: &mut [f64]) {
    let len = (x.len() + k.len()).next_power_of_two();
    let (fwd, inv) = planner.plans(len);
    let mut fx: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fx.resize(len, Complex64::default());
    let mut fk: Vec<Complex64> = k.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fk.resize(len, Complex64::default());
    fwd.process(&mut fx);
    fwd.process(&mut fk);
    for (a, b) in fx.iter_mut().zip(&fk) {
        *a *= *b;
    }
    inv.process(&mut fx);
    let scale = 1.0 / len as f64;
    for i in lo..hi {
        out[i - lo] += fx[i].re * scale;
    }
}

/// Runs the online recursion for indices `0..=last`.
///
/// `kernel[0]` is ignored; `kernel` must have at least `last + 1` entries.
/// `step(n, s)` receives the convolution sum `s = Σ_{j<n} y(j) kernel(n-j)`
/// (zero for `n = 0`) and returns `y(n)`.
pub fn solve_online<F>(kernel: &[f64], last: usize, mut step: F) -> Vec<f64>
where
    F: FnMut(usize, f64) -> f64,
{
    assert!(kernel.len() > last, "kernel shorter than requested range");
    let mut y = vec![0.0; last + 1];
    let mut acc = vec![0.0; last + 1];
    let mut planner = Planner::new();
    solve_range(kernel, 0, last + 1, &mut y, &mut acc, &mut step, &mut planner);
    y
}

fn solve_range<F>(
    kernel: &[f64],
    lo: usize,
    hi: usize,
    y: &mut [f64],
    acc: &mut [f64],
    step: &mut F,
    planner: &mut Planner,
) where
    F: FnMut(usize, f64) -> f64,
{
    if hi - lo <= DIRECT_CUTOFF {
        for n in lo..hi {
            let mut s = acc[n];
            for j in lo..n {
                s += y[j] * kernel[n - j];
            }
            y[n] = step(n, s);
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    solve_range(kernel, lo, mid, y, acc, step, planner);
    // contribution of y[lo..mid) to acc[mid..hi)
    add_convolution(planner, &y[lo..mid], &kernel[..hi - lo], mid - lo, hi - lo, &mut acc[mid..hi]);
    solve_range(kernel, mid, hi, y, acc, step, planner);
}

/// `Σ_{j<n} y(j) kernel(n-j)` by direct summation.
pub fn direct_sum(y: &[f64], kernel: &[f64], n: usize) -> f64 {
    // pairs (y[j], kernel[n-j]) for j = 0..n
    let ys = &y[..n];
    let ks = &kernel[1..=n];
    let mut lanes = [0.0f64; 4];
    let mut iy = ys.chunks_exact(4);
    let mut ik = ks.rchunks_exact(4);
    for (cy, ck) in (&mut iy).zip(&mut ik) {
        lanes[0] += cy[0] * ck[3];
        lanes[1] += cy[1] * ck[2];
        lanes[2] += cy[2] * ck[1];
        lanes[3] += cy[3] * ck[0];
    }
    let mut s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    let rest_y = iy.remainder();
    let rest_k = ik.remainder();
    for (a, b) in rest_y.iter().zip(rest_k.iter().rev()) {
        s += a * b;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(kernel: &[f64], last: usize, mut step: impl FnMut(usize, f64) -> f64) -> Vec<f64> {
        let mut y = vec![0.0; last + 1];
        for n in 0..=last {
            let s: f64 = (0..n).map(|j| y[j] * kernel[n - j]).sum();
            y[n] = step(n, s);
        }
        y
    }

    #[test]
    fn matches_direct_recursion() {
        let kernel: Vec<f64> = (0..2000).map(|k| if k == 0 { 0.0 } else { 0.5 / (k as f64).powf(1.3) }).collect();
        let step = |n: usize, s: f64| if n == 0 { 1.0 } else { s };
        let fast = solve_online(&kernel, 1999, step);
        let slow = direct(&kernel, 1999, step);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn direct_sum_matches_naive() {
        let y: Vec<f64> = (0..37).map(|i| (i as f64).sin()).collect();
        let k: Vec<f64> = (0..37).map(|i| (i as f64 * 0.3).cos()).collect();
        for n in 0..37 {
            let naive: f64 = (0..n).map(|j| y[j] * k[n - j]).sum();
            assert!((direct_sum(&y, &k, n) - naive).abs() < 1e-12);
        }
    }
}
