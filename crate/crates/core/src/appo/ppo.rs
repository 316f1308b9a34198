//! Clipped PPO with a clipped value loss and an entropy bonus.

use rand::seq::SliceRandom;
use rand::Rng;
use tinynn::{clip_grad_norm, log_softmax, Adam, Input, StepOutcome};

use super::policy::ActorCritic;
use crate::rewards::ConfigError;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub clip: f64,
    pub value_clip: f64,
    pub epochs: usize,
    /// Samples per learner update.
    pub batch: usize,
    /// Samples per gradient step; divides `batch`.
    pub minibatch: usize,
    pub max_grad_norm: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub lr: f64,
    pub num_envs: usize,
    pub rollout_len: usize,
    pub max_staleness: u64,
    pub hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.1,
            value_clip: 1.0,
            epochs: 1,
            batch: 4096,
            minibatch: 512,
            max_grad_norm: 4.0,
            value_coef: 0.5,
            entropy_coef: 0.001,
            gamma: 0.999,
            lambda: 0.95,
            lr: 1e-3,
            num_envs: 64,
            rollout_len: 32,
            max_staleness: 4,
            hidden: vec![64, 64],
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |k: &str, m: String| Err(ConfigError::new(k, m));
        if !(self.clip > 0.0 && self.clip.is_finite()) {
            return bad("ppo.clip", format!("clip must be > 0, got {}", self.clip));
        }
        if !(self.value_clip > 0.0) {
            return bad("ppo.value_clip", format!("value_clip must be > 0, got {}", self.value_clip));
        }
        if self.epochs == 0 {
            return bad("ppo.epochs", "epochs must be at least 1".into());
        }
        if self.rollout_len == 0 {
            return bad("ppo.rollout_len", "rollout_len must be at least 1".into());
        }
        if self.batch == 0 || self.batch % self.rollout_len != 0 {
            return bad("ppo.batch", format!("batch {} must be a positive multiple of rollout_len {}", self.batch, self.rollout_len));
        }
        if self.minibatch == 0 || self.batch % self.minibatch != 0 {
            return bad("ppo.minibatch", format!("minibatch {} must divide batch {}", self.minibatch, self.batch));
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("ppo.max_grad_norm", format!("max_grad_norm must be > 0, got {}", self.max_grad_norm));
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return bad("ppo.value_coef", "loss coefficients must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("ppo.gamma", format!("gamma must lie in [0,1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("ppo.lambda", format!("lambda must lie in [0,1], got {}", self.lambda));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("ppo.lr", format!("lr must be > 0, got {}", self.lr));
        }
        if self.num_envs == 0 {
            return bad("ppo.num_envs", "num_envs must be at least 1".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("ppo.hidden", "hidden layer sizes must be positive".into());
        }
        Ok(())
    }
}

/// Training samples for one learner update, row-major observations.
#[derive(Debug, Clone, Default)]
pub struct PpoBuffer {
    pub obs_dim: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub logp: Vec<f64>,
    pub values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl PpoBuffer {
    pub fn new(obs_dim: usize) -> Self {
        Self { obs_dim, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs_row(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    /// Shifts and scales advantages to mean 0 and standard deviation 1.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len() as f64;
        if n == 0.0 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n;
        let var = self.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt().max(1e-8);
        for a in &mut self.advantages {
            *a = (*a - mean) / std;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub clip_frac: f64,
}

/// Per-sample clipped surrogate loss `-min(r A, clip(r, 1-c, 1+c) A)`.
pub fn clipped_surrogate(ratio: f64, adv: f64, clip: f64) -> f64 {
    -(ratio * adv).min(ratio.clamp(1.0 - clip, 1.0 + clip) * adv)
}

/// Per-sample clipped value loss `max((v-R)^2, (v_old + clip(v-v_old, ±c) - R)^2)`.
pub fn clipped_value_loss(v: f64, v_old: f64, ret: f64, clip: f64) -> f64 {
    let vc = v_old + (v - v_old).clamp(-clip, clip);
    (v - ret).powi(2).max((vc - ret).powi(2))
}

/// Loss over the samples at `idx`, averaged:
/// `policy + value_coef * value - entropy_coef * entropy`.
pub fn ppo_loss(net: &ActorCritic, buf: &PpoBuffer, idx: &[usize], cfg: &PpoConfig) -> LossParts {
    let m = idx.len() as f64;
    let mut out = LossParts::default();
    for &i in idx {
        let x = buf.obs_row(i);
        let ls = log_softmax(net.policy.forward(Input::Dense(x)).logits());
        let ratio = (ls[buf.actions[i]] - buf.logp[i]).exp();
        out.policy += clipped_surrogate(ratio, buf.advantages[i], cfg.clip) / m;
        out.entropy += -ls.iter().map(|l| l.exp() * l).sum::<f64>() / m;
        let v = net.value.forward(Input::Dense(x)).output()[0];
        out.value += clipped_value_loss(v, buf.values[i], buf.returns[i], cfg.value_clip) / m;
        if (ratio - 1.0).abs() > cfg.clip {
            out.clip_frac += 1.0 / m;
        }
    }
    out.total = out.policy + cfg.value_coef * out.value - cfg.entropy_coef * out.entropy;
    out
}

/// Gradients of [`ppo_loss`] accumulated into `gp` (policy) and `gv` (value).
pub fn ppo_gradients(net: &ActorCritic, buf: &PpoBuffer, idx: &[usize], cfg: &PpoConfig, gp: &mut [f64], gv: &mut [f64]) -> LossParts {
    let m = idx.len() as f64;
    let mut out = LossParts::default();
    let mut gl = vec![0.0; net.num_actions()];
    for &i in idx {
        let x = buf.obs_row(i);
        let pc = net.policy.forward(Input::Dense(x));
        let ls = log_softmax(pc.logits());
        let a = buf.actions[i];
        let adv = buf.advantages[i];
        let ratio = (ls[a] - buf.logp[i]).exp();
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        out.policy += -unclipped.min(clipped) / m;
        if (ratio - 1.0).abs() > cfg.clip {
            out.clip_frac += 1.0 / m;
        }
        // d(-min)/d(logp): the clipped branch is constant in the parameters.
        let d_logp = if unclipped <= clipped { -adv * ratio } else { 0.0 };
        let ent = -ls.iter().map(|l| l.exp() * l).sum::<f64>();
        out.entropy += ent / m;
        for (j, g) in gl.iter_mut().enumerate() {
            let p = ls[j].exp();
            let onehot = if j == a { 1.0 } else { 0.0 };
            *g = (d_logp * (onehot - p) + cfg.entropy_coef * p * (ls[j] + ent)) / m;
        }
        net.policy.backward_logits(&pc, &gl, gp);

        let vc = net.value.forward(Input::Dense(x));
        let v = vc.output()[0];
        let v_old = buf.values[i];
        let ret = buf.returns[i];
        let delta = v - v_old;
        let v_clip = v_old + delta.clamp(-cfg.value_clip, cfg.value_clip);
        let (l1, l2) = ((v - ret).powi(2), (v_clip - ret).powi(2));
        out.value += l1.max(l2) / m;
        let dv = if l1 >= l2 {
            2.0 * (v - ret)
        } else if delta.abs() < cfg.value_clip {
            2.0 * (v_clip - ret)
        } else {
            0.0
        };
        net.value.backward(&vc, &[cfg.value_coef * dv / m], gv);
    }
    out.total = out.policy + cfg.value_coef * out.value - cfg.entropy_coef * out.entropy;
    out
}

/// Region markers for gradient checks: ReLU patterns of both networks plus
/// which branch of each clipped term is active.
pub fn ppo_loss_pattern(net: &ActorCritic, buf: &PpoBuffer, idx: &[usize], cfg: &PpoConfig) -> Vec<bool> {
    let mut pat = Vec::new();
    for &i in idx {
        let x = buf.obs_row(i);
        let pc = net.policy.forward(Input::Dense(x));
        pat.extend(pc.activation_pattern());
        let ls = log_softmax(pc.logits());
        let ratio = (ls[buf.actions[i]] - buf.logp[i]).exp();
        let adv = buf.advantages[i];
        pat.push(ratio * adv <= ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * adv);
        pat.push(ratio > 1.0 + cfg.clip);
        pat.push(ratio < 1.0 - cfg.clip);
        let vc = net.value.forward(Input::Dense(x));
        pat.extend(vc.activation_pattern());
        let v = vc.output()[0];
        let delta = v - buf.values[i];
        let v_clip = buf.values[i] + delta.clamp(-cfg.value_clip, cfg.value_clip);
        // Unclipped, both branches coincide and the comparison is float noise.
        let unclipped = delta.abs() < cfg.value_clip;
        pat.push(unclipped || (v - buf.returns[i]).powi(2) >= (v_clip - buf.returns[i]).powi(2));
        pat.push(unclipped);
    }
    pat
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    /// Mean pre-clip global gradient norm.
    pub grad_norm: f64,
    pub minibatches: u64,
    /// Minibatches whose loss or gradient was non-finite.
    pub skipped: u64,
}

/// Owns the actor-critic parameters and optimizers. The learner is the only
/// mutator; every applied update bumps `version`.
#[derive(Debug, Clone)]
pub struct PpoLearner {
    pub net: ActorCritic,
    pub cfg: PpoConfig,
    opt_policy: Adam,
    opt_value: Adam,
    version: u64,
    skipped_total: u64,
    gp: Vec<f64>,
    gv: Vec<f64>,
}

impl PpoLearner {
    pub fn new(net: ActorCritic, cfg: PpoConfig) -> Self {
        let (np, nv) = (net.policy.num_params(), net.value.num_params());
        Self {
            opt_policy: Adam::new(np, cfg.lr),
            opt_value: Adam::new(nv, cfg.lr),
            gp: vec![0.0; np],
            gv: vec![0.0; nv],
            net,
            cfg,
            version: 0,
            skipped_total: 0,
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn skipped_total(&self) -> u64 {
        self.skipped_total
    }

    /// One update: normalizes advantages, then runs `epochs` passes over
    /// shuffled minibatches. The version advances once per call.
    pub fn update<R: Rng + ?Sized>(&mut self, buf: &mut PpoBuffer, rng: &mut R) -> PpoStats {
        buf.normalize_advantages();
        let mut stats = PpoStats::default();
        let n = buf.len();
        let mb = self.cfg.minibatch.min(n.max(1));
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..self.cfg.epochs {
            order.shuffle(rng);
            for idx in order.chunks(mb) {
                self.gp.iter_mut().for_each(|g| *g = 0.0);
                self.gv.iter_mut().for_each(|g| *g = 0.0);
                let parts = ppo_gradients(&self.net, buf, idx, &self.cfg, &mut self.gp, &mut self.gv);
                stats.minibatches += 1;
                let norm = clip_grad_norm(&mut [&mut self.gp[..], &mut self.gv[..]], self.cfg.max_grad_norm);
                if !parts.total.is_finite() || !norm.is_finite() {
                    stats.skipped += 1;
                    self.skipped_total += 1;
                    continue;
                }
                let a = self.opt_policy.step(self.net.policy.params_mut(), &self.gp);
                let b = self.opt_value.step(self.net.value.params_mut(), &self.gv);
                if a == StepOutcome::SkippedNonFinite || b == StepOutcome::SkippedNonFinite {
                    stats.skipped += 1;
                    self.skipped_total += 1;
                    continue;
                }
                stats.policy_loss += parts.policy;
                stats.value_loss += parts.value;
                stats.entropy += parts.entropy;
                stats.clip_frac += parts.clip_frac;
                stats.grad_norm += norm;
            }
        }
        let applied = (stats.minibatches - stats.skipped).max(1) as f64;
        stats.policy_loss /= applied;
        stats.value_loss /= applied;
        stats.entropy /= applied;
        stats.clip_frac /= applied;
        stats.grad_norm /= applied;
        self.version += 1;
        stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_examples() {
        for r in [0.9, 0.95, 1.0, 1.05, 1.1] {
            for a in [-2.0, 0.5, 3.0] {
                assert!((clipped_surrogate(r, a, 0.1) + r * a).abs() < 1e-15);
            }
        }
        assert!((clipped_surrogate(1.5, 2.0, 0.1) + 1.1 * 2.0).abs() < 1e-15);
        // Negative advantage keeps the pessimistic unclipped term.
        assert!((clipped_surrogate(1.5, -2.0, 0.1) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn value_loss_examples() {
        assert_eq!(clipped_value_loss(0.5, 0.0, 1.0, 1.0), 0.25);
        // Far move: the clipped prediction is further from the target.
        assert_eq!(clipped_value_loss(3.0, 0.0, 2.5, 1.0), 2.25);
    }

    #[test]
    fn config_rejects_bad_batch() {
        let cfg = PpoConfig { batch: 100, ..Default::default() };
        assert_eq!(cfg.validate().unwrap_err().key, "ppo.batch");
        PpoConfig::default().validate().unwrap();
    }
}
