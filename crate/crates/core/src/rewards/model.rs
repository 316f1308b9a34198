//! Parametric reward models over caption features and their training.
//!
//! The classifier predicts `P(helpful | caption)` with a sigmoid head and is
//! trained with binary cross-entropy. The ranker outputs an unbounded score
//! and is trained with the Bradley-Terry preference loss.

use std::sync::Arc;

use rand::Rng;
use tinynn::{clip_grad_norm, featurize_caption, sigmoid, softplus, Adam, Head, Input, Mlp, SparseVec, StepOutcome, CAPTION_DIM};

use super::math::{preference_nll, preference_nll_grad};
use crate::annotate::{AnnotationStore, Preference};

pub const REWARD_HIDDEN: usize = 128;
pub const CLASSIFIER_LR: f64 = 1e-4;
pub const RANKER_LR: f64 = 1e-5;
pub const REWARD_BATCH: usize = 256;
pub const REWARD_CLIP: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Classifier,
    Ranker,
}

pub fn caption_features(caption: &str) -> SparseVec {
    featurize_caption(caption, CAPTION_DIM)
}

pub fn reward_model_sizes() -> Vec<usize> {
    vec![CAPTION_DIM, REWARD_HIDDEN, REWARD_HIDDEN, 1]
}

pub fn new_reward_model<R: Rng + ?Sized>(kind: ModelKind, rng: &mut R) -> Mlp {
    let head = match kind {
        ModelKind::Classifier => Head::Sigmoid,
        ModelKind::Ranker => Head::Linear,
    };
    Mlp::new(&reward_model_sizes(), head, rng)
}

/// Mean binary cross-entropy computed from logits.
pub fn classifier_loss(model: &Mlp, batch: &[(&SparseVec, f64)]) -> f64 {
    let n = batch.len() as f64;
    batch
        .iter()
        .map(|(x, y)| {
            let l = model.forward(Input::Sparse(x)).logits()[0];
            softplus(l) - y * l
        })
        .sum::<f64>()
        / n
}

/// Accumulates the gradient of [`classifier_loss`] into `grads` and returns the loss.
pub fn classifier_gradients(model: &Mlp, batch: &[(&SparseVec, f64)], grads: &mut [f64]) -> f64 {
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for (x, y) in batch {
        let cache = model.forward(Input::Sparse(x));
        let l = cache.logits()[0];
        loss += softplus(l) - y * l;
        model.backward_logits(&cache, &[(sigmoid(l) - y) / n], grads);
    }
    loss / n
}

/// Mean Bradley-Terry negative log-likelihood over preference pairs.
pub fn ranker_loss(model: &Mlp, batch: &[(&SparseVec, &SparseVec, Preference)]) -> f64 {
    let n = batch.len() as f64;
    batch
        .iter()
        .map(|(a, b, y)| {
            let r1 = model.forward(Input::Sparse(a)).output()[0];
            let r2 = model.forward(Input::Sparse(b)).output()[0];
            preference_nll(r1, r2, *y)
        })
        .sum::<f64>()
        / n
}

/// Accumulates the gradient of [`ranker_loss`] into `grads` and returns the loss.
pub fn ranker_gradients(model: &Mlp, batch: &[(&SparseVec, &SparseVec, Preference)], grads: &mut [f64]) -> f64 {
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for (a, b, y) in batch {
        let ca = model.forward(Input::Sparse(a));
        let cb = model.forward(Input::Sparse(b));
        let (r1, r2) = (ca.output()[0], cb.output()[0]);
        loss += preference_nll(r1, r2, *y);
        let g = preference_nll_grad(r1, r2, *y) / n;
        model.backward(&ca, &[g], grads);
        model.backward(&cb, &[-g], grads);
    }
    loss / n
}

/// An immutable reward-model snapshot handed to reward synthesis.
#[derive(Debug, Clone)]
pub struct RewardSnapshot {
    pub kind: ModelKind,
    pub model: Arc<Mlp>,
    pub version: u64,
}

impl RewardSnapshot {
    /// Classifier probability or ranker score.
    pub fn output(&self, x: &SparseVec) -> f64 {
        self.model.forward(Input::Sparse(x)).output()[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub loss: f64,
    pub grad_norm: f64,
    pub skipped: bool,
}

/// Owns a reward model, its optimizer and a version counter bumped on every
/// applied update.
#[derive(Debug, Clone)]
pub struct RewardLearner {
    kind: ModelKind,
    model: Mlp,
    adam: Adam,
    pub batch: usize,
    pub clip: f64,
    version: u64,
    updates: u64,
    skipped: u64,
    grads: Vec<f64>,
}

impl RewardLearner {
    pub fn new<R: Rng + ?Sized>(kind: ModelKind, lr: f64, rng: &mut R) -> Self {
        let model = new_reward_model(kind, rng);
        Self::from_model(kind, model, lr)
    }

    pub fn from_model(kind: ModelKind, model: Mlp, lr: f64) -> Self {
        let n = model.num_params();
        Self {
            kind,
            adam: Adam::new(n, lr),
            grads: vec![0.0; n],
            model,
            batch: REWARD_BATCH,
            clip: REWARD_CLIP,
            version: 0,
            updates: 0,
            skipped: 0,
        }
    }

    pub fn default_lr(kind: ModelKind) -> f64 {
        match kind {
            ModelKind::Classifier => CLASSIFIER_LR,
            ModelKind::Ranker => RANKER_LR,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn snapshot(&self) -> RewardSnapshot {
        RewardSnapshot { kind: self.kind, model: Arc::new(self.model.clone()), version: self.version }
    }

    fn apply(&mut self, loss: f64) -> UpdateStats {
        let grad_norm = clip_grad_norm(&mut [&mut self.grads[..]], self.clip);
        let skipped = !loss.is_finite() || self.adam.step(self.model.params_mut(), &self.grads) == StepOutcome::SkippedNonFinite;
        if skipped {
            self.skipped += 1;
        } else {
            self.updates += 1;
            self.version += 1;
        }
        UpdateStats { loss, grad_norm, skipped }
    }

    pub fn step_classifier(&mut self, batch: &[(&SparseVec, f64)]) -> UpdateStats {
        assert_eq!(self.kind, ModelKind::Classifier);
        self.grads.iter_mut().for_each(|g| *g = 0.0);
        let loss = classifier_gradients(&self.model, batch, &mut self.grads);
        self.apply(loss)
    }

    pub fn step_ranker(&mut self, batch: &[(&SparseVec, &SparseVec, Preference)]) -> UpdateStats {
        assert_eq!(self.kind, ModelKind::Ranker);
        self.grads.iter_mut().for_each(|g| *g = 0.0);
        let loss = ranker_gradients(&self.model, batch, &mut self.grads);
        self.apply(loss)
    }

    /// One minibatch update on records drawn uniformly with replacement from
    /// the store. Returns `None` when the store has no data of the right kind.
    pub fn update_from_store<R: Rng + ?Sized>(&mut self, store: &AnnotationStore, rng: &mut R) -> Option<UpdateStats> {
        match self.kind {
            ModelKind::Classifier => {
                let n = store.binary_len();
                if n == 0 {
                    return None;
                }
                let data: Vec<(SparseVec, f64)> = (0..self.batch)
                    .map(|_| {
                        let r = store.binary_at(rng.random_range(0..n));
                        (caption_features(&r.caption), r.label as f64)
                    })
                    .collect();
                let refs: Vec<(&SparseVec, f64)> = data.iter().map(|(x, y)| (x, *y)).collect();
                Some(self.step_classifier(&refs))
            }
            ModelKind::Ranker => {
                let prefs = store.preferences();
                if prefs.is_empty() {
                    return None;
                }
                let data: Vec<(SparseVec, SparseVec, Preference)> = (0..self.batch)
                    .map(|_| {
                        let p = &prefs[rng.random_range(0..prefs.len())];
                        (caption_features(&p.caption1), caption_features(&p.caption2), p.label)
                    })
                    .collect();
                let refs: Vec<(&SparseVec, &SparseVec, Preference)> = data.iter().map(|(a, b, y)| (a, b, *y)).collect();
                Some(self.step_ranker(&refs))
            }
        }
    }
}
