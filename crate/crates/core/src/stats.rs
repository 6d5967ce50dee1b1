//! Small shared statistics helpers.
//!
//! All standard deviations in this crate use the n−1 denominator.

/// Mean and sample standard deviation (n−1), two-pass.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "need at least two values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Mean and sample variance (n−1), two-pass.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "need at least two values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, ss / (n - 1) as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    values.iter().sum::<f64>() / values.len() as f64
}

/// Streaming mean/variance accumulator (Welford). Used where materializing
/// per-instance differences would cost a full matrix.
#[derive(Debug, Clone, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n−1). Zero when fewer than two values were pushed.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pass_matches_hand_values() {
        let (m, s) = mean_std(&[2.0, 4.0, 6.0]);
        assert_eq!(m, 4.0);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn welford_matches_two_pass() {
        let vals: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 10.0 + 5.0).collect();
        let mut acc = RunningStats::new();
        for &v in &vals {
            acc.push(v);
        }
        let (m, v) = mean_var(&vals);
        assert!((acc.mean() - m).abs() < 1e-12 * m.abs().max(1.0));
        assert!((acc.variance() - v).abs() < 1e-12 * v.abs().max(1.0));
    }
}
