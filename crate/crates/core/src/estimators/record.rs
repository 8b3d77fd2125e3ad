use serde::{Deserialize, Serialize};

/// One reduced quantity with its uncertainty and, when known, the value it
/// should approach.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub name: String,
    pub rho: Option<f64>,
    pub y: Option<f64>,
    pub estimate: f64,
    pub se: f64,
    pub clustered_se: Option<f64>,
    pub target: Option<f64>,
    pub target_provenance: String,
    pub z: Option<f64>,
    pub count: u64,
    pub seed: u64,
    /// Free-form flags such as `degenerate-ci` or `low-power`.
    pub note: String,
}

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 11] =
    ["name", "rho", "y", "estimate", "se", "clustered_se", "target", "target_provenance", "z", "count", "seed"];

impl EstimateRecord {
    pub fn new(name: impl Into<String>, estimate: f64, se: f64, count: u64) -> Self {
        Self {
            name: name.into(),
            rho: None,
            y: None,
            estimate,
            se: if se.is_nan() { se } else { se.max(0.0) },
            clustered_se: None,
            target: None,
            target_provenance: String::new(),
            z: None,
            count: count.max(1),
            seed: 0,
            note: String::new(),
        }
    }

    /// Sets the target and the z-score `(estimate - target) / se`.
    pub fn with_target(mut self, target: f64, provenance: impl Into<String>) -> Self {
        self.target = Some(target);
        self.target_provenance = provenance.into();
        self.z = (self.se > 0.0).then(|| (self.estimate - target) / self.se);
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn with_y(mut self, y: f64) -> Self {
        self.y = Some(y);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_clustered_se(mut self, se: f64) -> Self {
        self.clustered_se = Some(se);
        self
    }

    pub fn flag(mut self, note: &str) -> Self {
        if !self.note.is_empty() {
            self.note.push(';');
        }
        self.note.push_str(note);
        self
    }

    /// Fields in [`CSV_COLUMNS`] order; missing values are empty strings.
    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        vec![
            self.name.clone(),
            opt(self.rho),
            opt(self.y),
            fmt_f64(self.estimate),
            fmt_f64(self.se),
            opt(self.clustered_se),
            opt(self.target),
            self.target_provenance.clone(),
            opt(self.z),
            self.count.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Shortest representation that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_score_and_fields() {
        let r = EstimateRecord::new("x", 1.5, 0.25, 10).with_target(1.0, "exact").with_rho(0.5).with_seed(7);
        assert_eq!(r.z, Some(2.0));
        let f = r.csv_fields();
        assert_eq!(f.len(), CSV_COLUMNS.len());
        assert_eq!(f[0], "x");
        assert_eq!(f[2], "");
        assert_eq!(f[3], "1.5");
        assert_eq!(f[10], "7");
        let flat = EstimateRecord::new("y", 0.0, 0.0, 0).with_target(1.0, "");
        assert_eq!(flat.z, None);
        assert_eq!(flat.count, 1);
        assert_eq!(flat.flag("a").flag("b").note, "a;b");
    }
}
