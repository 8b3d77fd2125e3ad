use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::renewal::RenewalLaw;

/// Which limit regime a simulated batch targets; sets the truncation window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Regime {
    /// Running maxima and point-process limits over the whole path.
    Macroscopic,
    /// Block maxima over blocks of length `floor(n^rho)`.
    Mesoscopic { rho: f64 },
    /// Single-site marginals; the mesoscopic window with `d = 1`.
    Local,
}

/// How `m` is picked inside a [`TruncationWindow`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum TruncationPolicy {
    /// Geometric mean of the two bounds.
    GeometricMean,
    /// [`TruncationWindow::core`].
    Core,
    /// Log-scale position, see [`TruncationWindow::at`].
    Position { position: f64 },
    Fixed { m: usize },
}

impl TruncationPolicy {
    pub fn level(&self, window: &TruncationWindow) -> usize {
        match *self {
            TruncationPolicy::GeometricMean => window.at(0.5),
            TruncationPolicy::Core => window.core_level(),
            TruncationPolicy::Position { position } => window.at(position),
            TruncationPolicy::Fixed { m } => m,
        }
    }
}

impl std::str::FromStr for TruncationPolicy {
    type Err = crate::Error;

    /// `geometric`, `core`, `pos:<p>` or a plain integer.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" | "geometric-mean" => Ok(Self::GeometricMean),
            "core" => Ok(Self::Core),
            _ => {
                if let Some(p) = s.strip_prefix("pos:") {
                    match p.parse::<f64>() {
                        Ok(position) if position.is_finite() => Ok(Self::Position { position }),
                        _ => param(format!("bad truncation position '{p}'")),
                    }
                } else {
                    match s.parse::<usize>() {
                        Ok(m) if m >= 2 => Ok(Self::Fixed { m }),
                        _ => param(format!("truncation must be geometric, core, pos:<p> or an integer >= 2, got '{s}'")),
                    }
                }
            }
        }
    }
}

impl std::fmt::Display for TruncationPolicy {
    /// Inverse of `from_str`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::GeometricMean => write!(f, "geometric"),
            Self::Core => write!(f, "core"),
            Self::Position { position } => write!(f, "pos:{position:?}"),
            Self::Fixed { m } => write!(f, "{m}"),
        }
    }
}

/// Admissible range for the number `m` of retained Poisson arrivals and the
/// log-scale position inside it.
///
/// The asymptotic theory only requires `lower ≪ m ≪ upper`; `position = 0.5`
/// is the geometric mean of the two rates, `0` and `1` the endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationWindow {
    pub lower: f64,
    pub upper: f64,
    /// The rate both bounds share once the logarithmic factors are dropped:
    /// `w_n²/n` or `w_n/d^β`.
    pub core: f64,
}

pub const MIN_TRUNCATION: usize = 8;

/// `w_n = Σ_{k<n} F̄(k)`.
pub fn window_normalizer(law: &RenewalLaw, n: u64) -> f64 {
    crate::renewal::tables::kahan_sum((0..n).map(|k| law.survival(k)))
}

impl TruncationWindow {
    pub fn new(n: u64, alpha: f64, law: &RenewalLaw, regime: Regime) -> Result<Self> {
        if n < 2 {
            return param("path length must be at least 2");
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        let w = window_normalizer(law, n);
        let nf = n as f64;
        let ln = nf.ln();
        Ok(match regime {
            Regime::Macroscopic => {
                let core = w * w / nf;
                Self { lower: core / ln.powf(1.0 / (1.0 - alpha)), upper: core * ln, core }
            }
            Regime::Mesoscopic { rho } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return param(format!("mesoscopic rho must lie in (0, 1], got {rho}"));
                }
                let d = nf.powf(rho).floor().max(1.0);
                let scale = w / d.powf(law.beta());
                Self { lower: scale / ln, upper: scale * ln, core: scale }
            }
            Regime::Local => Self { lower: w / ln, upper: w * ln, core: w },
        })
    }

    /// `lower^(1-p) upper^p`, rounded and clamped to at least
    /// [`MIN_TRUNCATION`].
    pub fn at(&self, position: f64) -> usize {
        let m = (self.lower.ln() * (1.0 - position) + self.upper.ln() * position).exp();
        clamp_level(m)
    }

    pub fn core_level(&self) -> usize {
        clamp_level(self.core)
    }
}

fn clamp_level(m: f64) -> usize {
    (m.round() as usize).max(MIN_TRUNCATION)
}

/// Default truncation level: the geometric mean of the admissible rates.
/// For [`Regime::Local`] that is `w_n`.
pub fn default_truncation(n: u64, alpha: f64, beta: f64, regime: Regime) -> Result<usize> {
    let law = RenewalLaw::new(beta)?;
    Ok(TruncationWindow::new(n, alpha, &law, regime)?.at(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_paths_clamp() {
        assert_eq!(default_truncation(4, 0.7, 0.3, Regime::Macroscopic).unwrap(), MIN_TRUNCATION);
    }

    #[test]
    fn macroscopic_exponent_approaches_one_minus_two_beta() {
        let (alpha, beta) = (0.7, 0.3);
        let law = RenewalLaw::new(beta).unwrap();
        let slope = |n: f64| {
            let a = TruncationWindow::new(n as u64, alpha, &law, Regime::Macroscopic).unwrap();
            let b = TruncationWindow::new((n * 10.0) as u64, alpha, &law, Regime::Macroscopic).unwrap();
            let (ma, mb) = ((a.lower * a.upper).sqrt(), (b.lower * b.upper).sqrt());
            (mb.ln() - ma.ln()) / 10f64.ln()
        };
        let target = 1.0 - 2.0 * beta;
        let near = slope(1e6);
        assert!((near - target).abs() < (slope(1e3) - target).abs());
        assert!((near - target).abs() < 0.1, "{near}");
    }

    #[test]
    fn mesoscopic_exponent() {
        let (alpha, beta, rho) = (0.7, 0.3, 0.5);
        let law = RenewalLaw::new(beta).unwrap();
        let geo = |n: u64| {
            let t = TruncationWindow::new(n, alpha, &law, Regime::Mesoscopic { rho }).unwrap();
            (t.lower * t.upper).sqrt()
        };
        let s = (geo(10_000_000).ln() - geo(100_000).ln()) / 100f64.ln();
        assert!((s - (1.0 - (1.0 + rho) * beta)).abs() < 0.02, "{s}");
    }

    #[test]
    fn policies() {
        let law = RenewalLaw::new(0.3).unwrap();
        let t = TruncationWindow::new(100_000, 0.7, &law, Regime::Macroscopic).unwrap();
        assert_eq!("geometric".parse::<TruncationPolicy>().unwrap().level(&t), t.at(0.5));
        assert_eq!("core".parse::<TruncationPolicy>().unwrap().level(&t), (t.core.round() as usize).max(8));
        assert_eq!("pos:1".parse::<TruncationPolicy>().unwrap().level(&t), t.upper.round() as usize);
        assert_eq!("77".parse::<TruncationPolicy>().unwrap().level(&t), 77);
        for bad in ["1", "pos:x", "fast", ""] {
            assert!(bad.parse::<TruncationPolicy>().is_err(), "{bad}");
        }
        for text in ["geometric", "core", "pos:0.25", "300"] {
            assert_eq!(text.parse::<TruncationPolicy>().unwrap().to_string(), text);
        }
        // at n = 10^5 the macroscopic lower bound is below one
        assert!(t.lower < 1.0 && t.core > 100.0);
    }

    #[test]
    fn local_window_is_centred_on_w_n() {
        let law = RenewalLaw::new(0.3).unwrap();
        let t = TruncationWindow::new(10_000, 0.7, &law, Regime::Local).unwrap();
        let w = window_normalizer(&law, 10_000);
        assert!((t.core - w).abs() < 1e-9 && ((t.lower * t.upper).sqrt() - w).abs() < 1e-6);
    }

    #[test]
    fn bad_parameters() {
        assert!(default_truncation(1000, 1.0, 0.3, Regime::Macroscopic).is_err());
        assert!(default_truncation(1000, 0.7, 0.3, Regime::Mesoscopic { rho: 0.0 }).is_err());
        assert!(default_truncation(1, 0.7, 0.3, Regime::Macroscopic).is_err());
    }
}
