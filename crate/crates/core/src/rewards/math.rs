//! Closed-form reward arithmetic: Bradley-Terry, preference loss, running
//! statistics, thresholded rewards, the episodic bonus and the composite.

use std::collections::HashMap;
use std::hash::Hash;

use tinynn::softplus;

use crate::annotate::Preference;

/// Floor on the running standard deviation used to normalize ranker outputs.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// `exp(r1) / (exp(r1) + exp(r2))`, shifted by the max so neither
/// exponential overflows.
pub fn bt_probability(r1: f64, r2: f64) -> f64 {
    let m = r1.max(r2);
    let (e1, e2) = ((r1 - m).exp(), (r2 - m).exp());
    e1 / (e1 + e2)
}

/// Negative log-likelihood of a preference label under Bradley-Terry.
/// A `None` label uses the uniform target `[1/2, 1/2]`.
pub fn preference_nll(r1: f64, r2: f64, label: Preference) -> f64 {
    let d = r1 - r2;
    match label {
        Preference::First => softplus(-d),
        Preference::Second => softplus(d),
        Preference::None => 0.5 * (softplus(-d) + softplus(d)),
    }
}

/// Derivative of [`preference_nll`] with respect to `r1 - r2`.
pub fn preference_nll_grad(r1: f64, r2: f64, label: Preference) -> f64 {
    let p = bt_probability(r1, r2);
    match label {
        Preference::First => p - 1.0,
        Preference::Second => p,
        Preference::None => p - 0.5,
    }
}

/// Welford running mean and population standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierMode {
    /// `1[p > eta]`.
    Binary,
    /// The probability itself.
    Real,
}

pub fn classification_reward(p: f64, eta: f64, mode: ClassifierMode) -> f64 {
    match mode {
        ClassifierMode::Binary => {
            if p > eta {
                1.0
            } else {
                0.0
            }
        }
        ClassifierMode::Real => p,
    }
}

/// Z-score of `r` under `stats`, kept only above the quantile `nu`.
/// Reads the statistics before folding in `r`; returns 0 while fewer than two
/// samples have been seen.
pub fn ranking_reward(r: f64, stats: &mut RunningStats, nu: f64) -> f64 {
    let out = ranking_reward_peek(r, stats, nu);
    stats.push(r);
    out
}

/// [`ranking_reward`] without the statistics update.
pub fn ranking_reward_peek(r: f64, stats: &RunningStats, nu: f64) -> f64 {
    if stats.count() < 2 {
        return 0.0;
    }
    let s = (r - stats.mean()) / stats.std().max(SIGMA_FLOOR);
    if s > nu {
        s
    } else {
        0.0
    }
}

pub fn episodic_normalize(r: f64, count: u32, z: f64) -> f64 {
    debug_assert!(count >= 1, "episodic count starts at 1");
    r / (count as f64).powf(z)
}

pub fn composite_reward(extrinsic: f64, intrinsic: f64, beta: f64) -> f64 {
    extrinsic + beta * intrinsic
}

/// Per-episode caption occurrence counts.
#[derive(Debug, Clone)]
pub struct EpisodicCounter<K: Eq + Hash = String> {
    counts: HashMap<K, u32>,
    z: f64,
}

impl<K: Eq + Hash> EpisodicCounter<K> {
    pub fn new(z: f64) -> Self {
        assert!(z > 0.0, "episodic exponent must be positive");
        Self { counts: HashMap::new(), z }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Records one more occurrence and returns the updated count.
    pub fn observe(&mut self, key: K) -> u32 {
        let n = self.counts.entry(key).or_insert(0);
        *n += 1;
        *n
    }

    pub fn count(&self, key: &K) -> u32 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn reset(&mut self) {
        self.counts.clear();
    }

    /// Records the occurrence and returns `r / N^z`.
    pub fn normalize(&mut self, key: K, r: f64) -> f64 {
        let n = self.observe(key);
        episodic_normalize(r, n, self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bt_examples() {
        assert_eq!(bt_probability(0.0, 0.0), 0.5);
        assert!((bt_probability(1.0, 0.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((bt_probability(800.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nll_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((preference_nll(0.3, 0.3, Preference::None) - ln2).abs() < 1e-15);
        assert!((preference_nll(0.3, 0.3, Preference::First) - ln2).abs() < 1e-15);
        assert!((preference_nll(1.0, 0.0, Preference::First) - 0.313_261_687_518_222_8).abs() < 1e-15);
    }

    #[test]
    fn ranking_examples() {
        let mut s = RunningStats::new();
        assert_eq!(ranking_reward(5.0, &mut s, 0.0), 0.0);
        let mut s = RunningStats::new();
        s.push(-1.0);
        s.push(1.0);
        assert_eq!(ranking_reward_peek(0.0, &s, 0.0), 0.0);
        assert_eq!(ranking_reward_peek(2.0, &s, 0.0), 2.0);
        let mut s = RunningStats::new();
        s.push(-2.0);
        s.push(2.0);
        assert_eq!(ranking_reward_peek(-1.0, &s, 0.0), 0.0);
    }

    #[test]
    fn episodic_examples() {
        let mut c = EpisodicCounter::new(3.0);
        assert_eq!(c.normalize("a".to_string(), 1.0), 1.0);
        assert_eq!(c.normalize("a".to_string(), 1.0), 0.125);
        c.observe("a".to_string());
        assert_eq!(c.normalize("a".to_string(), 0.5), 0.0078125);
        c.reset();
        assert_eq!(c.count(&"a".to_string()), 0);
    }

    #[test]
    fn composite_examples() {
        assert!((composite_reward(10.0, 1.0, 0.4) - 10.4).abs() < 1e-12);
        assert_eq!(composite_reward(3.0, 0.0, 0.4), 3.0);
        assert!((composite_reward(0.0, 1.0, 0.1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_stream_has_zero_std() {
        let mut s = RunningStats::new();
        for _ in 0..1000 {
            s.push(0.1);
        }
        assert!((s.mean() - 0.1).abs() < 1e-15);
        assert!(s.std() < 1e-12);
    }
}
