//! The warmup rule deciding where and how often the reward model trains.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::rewards::RewardKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    /// A few updates per received annotation batch, on the feedback path.
    Burst,
    /// Updates every learner iteration, on the training path.
    Continuous,
    /// No parametric model to train.
    Frozen,
}

pub fn warmup_gate(kind: RewardKind, store_size: usize, warmup: usize) -> UpdateMode {
    if !kind.has_model() {
        UpdateMode::Frozen
    } else if store_size < warmup {
        UpdateMode::Burst
    } else {
        UpdateMode::Continuous
    }
}

/// Counts reward-model updates by mode and checks the warmup rule on each.
#[derive(Debug, Default)]
pub struct WarmupInstrumentation {
    burst: AtomicU64,
    continuous: AtomicU64,
    continuous_below_warmup: AtomicU64,
}

impl WarmupInstrumentation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_burst(&self) {
        self.burst.fetch_add(1, Ordering::Relaxed);
    }

    /// Records a continuous update made while the store held `store_size`
    /// annotations. Panics if that breaks the warmup rule.
    pub fn record_continuous(&self, store_size: usize, warmup: usize) {
        if store_size < warmup {
            self.continuous_below_warmup.fetch_add(1, Ordering::Relaxed);
        }
        self.continuous.fetch_add(1, Ordering::Relaxed);
        assert!(store_size >= warmup, "continuous reward update with {store_size} annotations, below warmup {warmup}");
    }

    pub fn burst(&self) -> u64 {
        self.burst.load(Ordering::Relaxed)
    }

    pub fn continuous(&self) -> u64 {
        self.continuous.load(Ordering::Relaxed)
    }

    pub fn continuous_below_warmup(&self) -> u64 {
        self.continuous_below_warmup.load(Ordering::Relaxed)
    }
}
