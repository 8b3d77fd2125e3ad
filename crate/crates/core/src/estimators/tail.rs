//! Functionals of the tail process: the candidate extremal index, the
//! geometric law of the common-renewal count and the two-sided identity.

use super::record::EstimateRecord;
use crate::process::TailProcessSample;
use crate::renewal::RenewalTables;
use crate::stats::{binomial_se, chi_square_gof, geometric_cells, histogram, mean_se, ChiSquareTest};

pub const COUNT_CELLS: u64 = 60;

/// `P(no common renewal in {1..L})`, estimated by the fraction of samples
/// whose common set is `{0}`.
///
/// The bias against `qF2` is at most `Σ_{k>L} u(k)²`, reported in the note
/// and added to the standard error when judging agreement.
pub fn candidate_index_estimate(samples: &[TailProcessSample], tables: &RenewalTables) -> EstimateRecord {
    let counts: Vec<u64> = samples.iter().map(|s| s.common.len() as u64).collect();
    let horizon = samples.first().map(|s| s.horizon).unwrap_or(0);
    candidate_index_from_counts(&counts, horizon, tables)
}

pub fn candidate_index_from_counts(counts: &[u64], horizon: u64, tables: &RenewalTables) -> EstimateRecord {
    let n = counts.len() as u64;
    let p = counts.iter().filter(|&&c| c == 1).count() as f64 / n.max(1) as f64;
    let bias = tables.intersection_residual(horizon as usize);
    EstimateRecord::new("candidate_index", p, binomial_se(p, n), n)
        .with_target(tables.qf2(), "qF2")
        .flag(&format!("bias_bound={bias:.3e},L={horizon}"))
}

/// Mean of `|τ1 ∩ τ2 ∩ [0, L]|` against `1/qF2`, with the truncation bias
/// `Σ_{k>L} u(k)²` in the note.
pub fn common_count_mean(counts: &[u64], horizon: u64, tables: &RenewalTables) -> EstimateRecord {
    let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (mean, se) = mean_se(&values);
    let bias = tables.intersection_residual(horizon as usize);
    EstimateRecord::new("common_count_mean", mean, se, counts.len() as u64)
        .with_target(1.0 / tables.qf2(), "1/qF2")
        .flag(&format!("bias_bound={bias:.3e},L={horizon}"))
}

pub fn geometric_count_test(counts: &[u64], qf2: f64) -> Option<ChiSquareTest> {
    chi_square_gof(&histogram(counts.iter().copied(), COUNT_CELLS), &geometric_cells(qf2, COUNT_CELLS))
}

/// `P(N↔ = m) = m (1-q)^{m-1} q²` on cells `1..max_cell-1`, and the tail
/// `P(N↔ >= K) = q K (1-q)^{K-1} + (1-q)^K`.
pub fn two_sided_cells(q: f64, max_cell: u64) -> Vec<f64> {
    let r = 1.0 - q;
    let mut cells: Vec<f64> = (1..max_cell).map(|m| m as f64 * r.powi(m as i32 - 1) * q * q).collect();
    let k = max_cell as f64;
    cells.push(q * k * r.powi(max_cell as i32 - 1) + r.powi(max_cell as i32));
    cells
}

pub fn two_sided_count_test(counts: &[u64], qf2: f64) -> Option<ChiSquareTest> {
    chi_square_gof(&histogram(counts.iter().copied(), COUNT_CELLS), &two_sided_cells(qf2, COUNT_CELLS))
}

fn test_row(name: &str, test: Option<ChiSquareTest>, n: u64, provenance: &str) -> EstimateRecord {
    match test {
        Some(t) => EstimateRecord::new(name, t.p_value, 0.0, n)
            .flag(&format!("chi2={:.3},dof={},cells={provenance}", t.statistic, t.dof)),
        None => EstimateRecord::new(name, f64::NAN, 0.0, n).flag("low-power"),
    }
}

/// χ² of one-sided counts against Geometric(qF2).
pub fn geometric_count_row(counts: &[u64], qf2: f64) -> EstimateRecord {
    test_row("common_count_gof_p", geometric_count_test(counts, qf2), counts.len() as u64, "geometric(qF2)")
}

/// χ² of the two-sided counts `N↔` against `m (1-q)^{m-1} q²`.
pub fn two_sided_count_identity(samples: &[TailProcessSample], qf2: f64) -> EstimateRecord {
    let counts: Vec<u64> = samples.iter().map(|s| s.total_count() as u64).collect();
    two_sided_count_row(&counts, qf2)
}

pub fn two_sided_count_row(counts: &[u64], qf2: f64) -> EstimateRecord {
    test_row("two_sided_count_gof_p", two_sided_count_test(counts, qf2), counts.len() as u64, "m(1-q)^(m-1)q^2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::sample_geometric;
    use crate::renewal::RenewalLaw;
    use crate::rng::stream;

    #[test]
    fn two_sided_cells_sum_to_one() {
        for q in [0.2, 0.5, 0.87] {
            let c = two_sided_cells(q, 30);
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            assert!((c[0] - q * q).abs() < 1e-15);
        }
        // brute-force: convolution of two geometrics minus one
        let q: f64 = 0.4;
        let g = |k: u64| q * (1.0 - q).powi(k as i32 - 1);
        for m in 1..10u64 {
            let conv: f64 = (1..=m).map(|a| g(a) * g(m + 1 - a)).sum();
            assert!((conv - two_sided_cells(q, 30)[(m - 1) as usize]).abs() < 1e-15);
        }
    }

    #[test]
    fn candidate_index_all_singletons() {
        let tables = RenewalTables::build(&RenewalLaw::new(0.3).unwrap(), 2000).unwrap();
        let samples = vec![TailProcessSample { horizon: 500, common: vec![0], negative: None }; 10];
        let r = candidate_index_estimate(&samples, &tables);
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.target, Some(tables.qf2()));
    }

    #[test]
    fn identity_rows_on_synthetic_counts() {
        let q = 0.7;
        let mut rng = stream(5, 0, "twosided");
        let counts: Vec<u64> =
            (0..50_000).map(|_| sample_geometric(q, &mut rng) + sample_geometric(q, &mut rng) - 1).collect();
        assert!(two_sided_count_row(&counts, q).estimate > 0.001);
        assert!(two_sided_count_row(&counts, 0.6).estimate < 1e-6);
        let one: Vec<u64> = (0..50_000).map(|_| sample_geometric(q, &mut rng)).collect();
        assert!(geometric_count_row(&one, q).estimate > 0.001);
    }
}
