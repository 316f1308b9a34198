//! Intrinsic reward configuration.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::bow::{BOW_DIM, BOW_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewardKind {
    None,
    Retrieval,
    Classification,
    ClassificationReal,
    Ranking,
    EllmBow,
}

impl RewardKind {
    pub const ALL: [RewardKind; 6] = [
        RewardKind::None,
        RewardKind::Retrieval,
        RewardKind::Classification,
        RewardKind::ClassificationReal,
        RewardKind::Ranking,
        RewardKind::EllmBow,
    ];

    pub fn is_classifier(self) -> bool {
        matches!(self, RewardKind::Classification | RewardKind::ClassificationReal)
    }

    /// Whether the kind trains a parametric reward model.
    pub fn has_model(self) -> bool {
        self.is_classifier() || self == RewardKind::Ranking
    }

    /// Whether the kind needs annotations at all.
    pub fn uses_annotator(self) -> bool {
        matches!(self, RewardKind::Retrieval | RewardKind::Classification | RewardKind::ClassificationReal | RewardKind::Ranking)
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardKind::None => "none",
            RewardKind::Retrieval => "retrieval",
            RewardKind::Classification => "classification",
            RewardKind::ClassificationReal => "classification-real",
            RewardKind::Ranking => "ranking",
            RewardKind::EllmBow => "ellm-bow",
        })
    }
}

impl FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RewardKind::ALL.into_iter().find(|k| k.to_string() == s).ok_or_else(|| {
            format!("unknown reward kind {s:?} (expected none, retrieval, classification, classification-real, ranking, ellm-bow)")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{key}: {msg}")]
pub struct ConfigError {
    pub key: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(key: &str, msg: impl Into<String>) -> Self {
        Self { key: key.to_string(), msg: msg.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicConfig {
    pub kind: RewardKind,
    pub beta: f64,
    /// Classification threshold.
    pub eta: f64,
    /// Episodic exponent.
    pub z: f64,
    /// Standard-normal quantile used as the ranking threshold.
    pub nu: f64,
    pub bow_dim: usize,
    pub bow_seed: u64,
}

impl IntrinsicConfig {
    /// Default coefficients for `kind` on a sparse or dense task.
    pub fn defaults(kind: RewardKind, sparse: bool) -> Self {
        let beta = match kind {
            RewardKind::None => 0.0,
            RewardKind::Retrieval => {
                if sparse {
                    0.5
                } else {
                    0.1
                }
            }
            RewardKind::Classification | RewardKind::ClassificationReal | RewardKind::EllmBow => {
                if sparse {
                    0.4
                } else {
                    0.1
                }
            }
            RewardKind::Ranking => 0.05,
        };
        Self { kind, beta, eta: 0.5, z: 3.0, nu: 0.0, bow_dim: BOW_DIM, bow_seed: BOW_SEED }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(ConfigError::new("reward.beta", format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(ConfigError::new("reward.eta", format!("eta must lie in (0,1), got {}", self.eta)));
        }
        if !(self.z.is_finite() && self.z > 0.0) {
            return Err(ConfigError::new("reward.z", format!("z must be finite and > 0, got {}", self.z)));
        }
        if !self.nu.is_finite() {
            return Err(ConfigError::new("reward.nu", format!("nu must be finite, got {}", self.nu)));
        }
        if self.bow_dim == 0 {
            return Err(ConfigError::new("reward.bow_dim", "bow_dim must be positive"));
        }
        Ok(())
    }
}
