use serde::Serialize;

/// Outcome of a falsification scan or property probe.
///
/// `worst_violation` is signed: negative values are the smallest margin
/// seen, positive values mean the tested claim failed at `worst_point`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub conjecture_id: String,
    pub n: usize,
    pub trials: usize,
    pub worst_violation: f64,
    pub worst_point: Vec<f64>,
    pub kkt_residual: Option<f64>,
    /// Trials whose signed violation is positive.
    pub violations: usize,
    /// Trials skipped because the membership solver could not decide.
    pub inconclusive: usize,
    pub tol: f64,
    pub seed: u64,
    /// Smallest objective value found, for minimization scans.
    pub min_value: Option<f64>,
    /// Fraction of proposals accepted, for rejection-sampling probes.
    pub acceptance_rate: Option<f64>,
}

impl ScanReport {
    pub fn new(conjecture_id: impl Into<String>, n: usize, tol: f64, seed: u64) -> Self {
        Self {
            conjecture_id: conjecture_id.into(),
            n,
            trials: 0,
            worst_violation: f64::NEG_INFINITY,
            worst_point: Vec::new(),
            kkt_residual: None,
            violations: 0,
            inconclusive: 0,
            tol,
            seed,
            min_value: None,
            acceptance_rate: None,
        }
    }

    /// Records one trial with signed violation `v` at `point`.
    pub fn record(&mut self, v: f64, point: &[f64]) {
        self.trials += 1;
        if v > 0.0 {
            self.violations += 1;
        }
        if v > self.worst_violation || self.worst_point.is_empty() {
            self.worst_violation = v;
            self.worst_point = point.to_vec();
        }
    }

    /// Combines two partial reports of the same scan, keeping the worst
    /// margin. Ties keep `self`, so merging in a fixed order is
    /// deterministic.
    pub fn merge(mut self, other: ScanReport) -> ScanReport {
        self.trials += other.trials;
        self.violations += other.violations;
        self.inconclusive += other.inconclusive;
        if other.worst_violation > self.worst_violation || self.worst_point.is_empty() {
            self.worst_violation = other.worst_violation;
            self.worst_point = other.worst_point;
            self.kkt_residual = other.kkt_residual;
        }
        self.min_value = match (self.min_value, other.min_value) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }

    pub fn has_violation(&self) -> bool {
        self.violations > 0
    }

    /// `inconclusive / (trials + inconclusive)`.
    pub fn inconclusive_rate(&self) -> f64 {
        let total = self.trials + self.inconclusive;
        if total == 0 {
            0.0
        } else {
            self.inconclusive as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_tracks_worst_signed_value() {
        let mut r = ScanReport::new("t", 2, 0.0, 0);
        r.record(-0.5, &[1.0, 0.0]);
        r.record(-0.1, &[0.5, 0.5]);
        r.record(-0.3, &[0.0, 1.0]);
        assert_eq!(r.trials, 3);
        assert_eq!(r.worst_violation, -0.1);
        assert_eq!(r.worst_point, vec![0.5, 0.5]);
        assert!(!r.has_violation());
        r.record(0.2, &[0.1, 0.1]);
        assert!(r.has_violation());
    }

    #[test]
    fn merge_keeps_worst_and_sums_counts() {
        let mut a = ScanReport::new("t", 2, 0.0, 0);
        a.record(-1.0, &[0.0, 0.0]);
        let mut b = ScanReport::new("t", 2, 0.0, 0);
        b.record(-0.5, &[1.0, 1.0]);
        b.inconclusive = 1;
        let m = a.merge(b);
        assert_eq!((m.trials, m.inconclusive), (2, 1));
        assert_eq!(m.worst_point, vec![1.0, 1.0]);
        assert!((m.inconclusive_rate() - 1.0 / 3.0).abs() < 1e-15);
    }
}
