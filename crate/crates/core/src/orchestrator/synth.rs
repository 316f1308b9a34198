//! Reward synthesis on the training path: turns rollout captions into
//! intrinsic rewards and forwards captions that need annotation.

use std::collections::HashMap;

use crate::annotate::{AnnotationStore, GoalVariant};
use crate::appo::RolloutBatch;
use crate::rewards::{
    caption_features, classification_reward, composite_reward, cosine, episodic_normalize, ranking_reward, BowEmbedder,
    ClassifierMode, IntrinsicConfig, RewardKind, RewardSnapshot, RunningStats,
};

pub struct RewardSynth {
    cfg: IntrinsicConfig,
    stats: RunningStats,
    embedder: BowEmbedder,
    goal: Vec<f64>,
    /// Per-caption model output (or goal cosine), valid for `cache_version`.
    cache: HashMap<String, f64>,
    cache_version: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Synthesized {
    /// Training reward per step.
    pub rewards: Vec<f64>,
    /// Sum of episodic-normalized intrinsic rewards before `beta`.
    pub intrinsic_sum: f64,
    /// Model version used, if any.
    pub model_version: Option<u64>,
}

impl RewardSynth {
    pub fn new(cfg: IntrinsicConfig, goal: GoalVariant) -> Self {
        let embedder = BowEmbedder::new(cfg.bow_dim, cfg.bow_seed);
        let goal = embedder.embed(goal.goal_string());
        Self { cfg, stats: RunningStats::new(), embedder, goal, cache: HashMap::new(), cache_version: None }
    }

    pub fn config(&self) -> &IntrinsicConfig {
        &self.cfg
    }

    pub fn running_stats(&self) -> &RunningStats {
        &self.stats
    }

    fn cached_output(&mut self, caption: &str, model: &RewardSnapshot) -> f64 {
        if self.cache_version != Some(model.version) {
            self.cache.clear();
            self.cache_version = Some(model.version);
        }
        if let Some(&v) = self.cache.get(caption) {
            return v;
        }
        let v = model.output(&caption_features(caption));
        self.cache.insert(caption.to_string(), v);
        v
    }

    /// Raw intrinsic reward of one arriving caption, before the episodic bonus.
    pub fn raw_intrinsic(&mut self, caption: &str, store: &AnnotationStore, model: Option<&RewardSnapshot>) -> f64 {
        match self.cfg.kind {
            RewardKind::None => 0.0,
            RewardKind::Retrieval => store.lookup(caption).map_or(0.0, f64::from),
            RewardKind::Classification | RewardKind::ClassificationReal => {
                let mode = if self.cfg.kind == RewardKind::Classification { ClassifierMode::Binary } else { ClassifierMode::Real };
                let model = model.expect("classification needs a reward model");
                let p = self.cached_output(caption, model);
                classification_reward(p, self.cfg.eta, mode)
            }
            RewardKind::Ranking => {
                let model = model.expect("ranking needs a reward model");
                let r = self.cached_output(caption, model);
                ranking_reward(r, &mut self.stats, self.cfg.nu)
            }
            RewardKind::EllmBow => {
                if self.cache_version.is_some() {
                    self.cache.clear();
                    self.cache_version = None;
                }
                if let Some(&v) = self.cache.get(caption) {
                    return v;
                }
                let v = cosine(&self.embedder.embed(caption), &self.goal);
                self.cache.insert(caption.to_string(), v);
                v
            }
        }
    }

    /// Training rewards for a rollout. `sink` receives every arriving caption
    /// that should be offered for annotation: unlabeled captions for binary
    /// kinds, all captions for ranking.
    pub fn synthesize(
        &mut self,
        batch: &RolloutBatch,
        store: &AnnotationStore,
        model: Option<&RewardSnapshot>,
        sink: &mut dyn FnMut(&str),
    ) -> Synthesized {
        let mut out = Synthesized { rewards: Vec::with_capacity(batch.len()), intrinsic_sum: 0.0, model_version: model.map(|m| m.version) };
        let binary = matches!(self.cfg.kind, RewardKind::Retrieval | RewardKind::Classification | RewardKind::ClassificationReal);
        for t in 0..batch.len() {
            let caption = &batch.captions[t];
            if binary && !store.contains(caption) {
                sink(caption);
            } else if self.cfg.kind == RewardKind::Ranking {
                sink(caption);
            }
            let r = self.raw_intrinsic(caption, store, model);
            let r = episodic_normalize(r, batch.caption_counts[t], self.cfg.z);
            out.intrinsic_sum += r;
            out.rewards.push(composite_reward(batch.rewards[t], r, self.cfg.beta));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::{IntrinsicConfig, ModelKind, RewardLearner};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch(captions: &[&str], counts: &[u32]) -> RolloutBatch {
        let n = captions.len();
        RolloutBatch {
            actions: vec![0; n],
            rewards: vec![0.0; n],
            dones: vec![false; n],
            captions: captions.iter().map(|c| c.to_string()).collect(),
            caption_counts: counts.to_vec(),
            ..Default::default()
        }
    }

    #[test]
    fn retrieval_pays_stored_labels_and_forwards_misses() {
        let mut store = AnnotationStore::new();
        store.insert_binary("You kill the newt!", 1, "mock");
        store.insert_binary("That door is closed.", 0, "mock");
        let cfg = IntrinsicConfig::defaults(RewardKind::Retrieval, true);
        let mut synth = RewardSynth::new(cfg, GoalVariant::Default);
        let b = batch(&["You kill the newt!", "That door is closed.", "5 gold pieces.", "You kill the newt!"], &[1, 1, 1, 2]);
        let mut missed = Vec::new();
        let out = synth.synthesize(&b, &store, None, &mut |c| missed.push(c.to_string()));
        assert_eq!(out.rewards, vec![0.5, 0.0, 0.0, 0.5 / 8.0]);
        assert_eq!(missed, vec!["5 gold pieces."]);
    }

    #[test]
    fn model_cache_follows_version() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut learner = RewardLearner::new(ModelKind::Classifier, 1e-2, &mut rng);
        let cfg = IntrinsicConfig { kind: RewardKind::ClassificationReal, ..IntrinsicConfig::defaults(RewardKind::ClassificationReal, true) };
        let mut synth = RewardSynth::new(cfg, GoalVariant::Default);
        let store = AnnotationStore::new();
        let s0 = learner.snapshot();
        let a = synth.raw_intrinsic("You kill the newt!", &store, Some(&s0));
        let x = caption_features("You kill the newt!");
        for _ in 0..20 {
            learner.step_classifier(&[(&x, 1.0)]);
        }
        let s1 = learner.snapshot();
        let b = synth.raw_intrinsic("You kill the newt!", &store, Some(&s1));
        assert!(b > a);
        // The old snapshot is untouched by the updates.
        assert_eq!(synth.raw_intrinsic("You kill the newt!", &store, Some(&s0)), a);
    }

    #[test]
    fn ellm_rewards_goal_words() {
        let cfg = IntrinsicConfig::defaults(RewardKind::EllmBow, true);
        let mut synth = RewardSynth::new(cfg, GoalVariant::Gold);
        let store = AnnotationStore::new();
        assert_eq!(synth.raw_intrinsic("", &store, None), 0.0);
        let gold = synth.raw_intrinsic("5 gold pieces.", &store, None);
        assert!(gold > 0.0 && gold <= 1.0);
    }
}
