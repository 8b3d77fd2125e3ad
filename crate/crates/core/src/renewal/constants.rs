use crate::error::{param, Result};
use crate::renewal::tables::RenewalTables;

/// `u(n) ≈ n^(β-1) / (C_F Γ(β) Γ(1-β))`.
pub fn asymptotic_u(tables: &RenewalTables, n: u64) -> f64 {
    (n as f64).powf(tables.beta() - 1.0) * tables.asym_const()
}

/// Mesoscopic extremal index `(1 - 2 ρ β) q_{F,2}`.
pub fn theta_rho(beta: f64, rho: f64, qf2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return param(format!("rho must lie in [0, 1], got {rho}"));
    }
    Ok((1.0 - 2.0 * rho * beta) * qf2)
}

/// Normalizing level `b_n = (n log n / 2)^(1/α)`, so that `n P(X_0 > b_n) → 1`.
pub fn scaling_b(n: f64, alpha: f64) -> Result<f64> {
    if !(n > 1.0) {
        return param(format!("b_n needs n > 1, got {n}"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return param(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    Ok((0.5 * n * n.ln()).powf(1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::law::RenewalLaw;

    #[test]
    fn theta_rho_values() {
        assert_eq!(theta_rho(0.3, 0.0, 0.77).unwrap(), 0.77);
        assert!((theta_rho(0.25, 1.0, 0.4).unwrap() - 0.2).abs() < 1e-15);
        assert!((theta_rho(1e-12, 0.7, 0.5).unwrap() - 0.5).abs() < 1e-11);
        assert!(theta_rho(0.3, 1.2, 0.5).is_err());
        assert!(theta_rho(0.3, -0.1, 0.5).is_err());
        let a = theta_rho(0.3, 0.2, 0.8).unwrap();
        let b = theta_rho(0.3, 0.5, 0.8).unwrap();
        assert!(a > b);
    }

    #[test]
    fn scaling_values() {
        let e2 = std::f64::consts::E.powi(2);
        assert!((scaling_b(e2, 1.0).unwrap() - e2).abs() < 1e-12);
        assert!((scaling_b(2.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let b1 = scaling_b(1000.0, 1.0).unwrap();
        assert!((scaling_b(1000.0, 0.5).unwrap() - b1 * b1).abs() < 1e-9 * b1 * b1);
        assert!(scaling_b(1.0, 0.5).is_err());
    }

    #[test]
    fn asymptote_of_u() {
        let t = RenewalTables::build(&RenewalLaw::new(0.3).unwrap(), 100).unwrap();
        assert_eq!(asymptotic_u(&t, 1), t.asym_const());
    }
}
