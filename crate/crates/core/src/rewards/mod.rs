//! Intrinsic rewards: retrieval, classification, ranking, the episodic bonus,
//! the composite reward and the bag-of-words goal-similarity baseline.

pub mod bow;
pub mod config;
pub mod math;
pub mod model;

pub use bow::{cosine, ellm_reward, BowEmbedder};
pub use config::{ConfigError, IntrinsicConfig, RewardKind};
pub use math::{
    bt_probability, classification_reward, composite_reward, episodic_normalize, preference_nll, preference_nll_grad,
    ranking_reward, ranking_reward_peek, ClassifierMode, EpisodicCounter, RunningStats, SIGMA_FLOOR,
};
pub use model::{caption_features, ModelKind, RewardLearner, RewardSnapshot, UpdateStats};

use crate::annotate::AnnotationStore;

/// Stored label for a caption, or 0 on a miss. The caller enqueues misses.
pub fn retrieval_reward(caption: &str, store: &AnnotationStore) -> (f64, bool) {
    match store.lookup(caption) {
        Some(l) => (l as f64, true),
        None => (0.0, false),
    }
}
