//! Rollout collection.

use caverns::Progress;
use rand::Rng;

use super::env::{EnvObs, RolloutEnv};
use super::policy::PolicySnapshot;
use crate::rewards::EpisodicCounter;

/// Seed for episode `episode` of environment slot `env_index`.
pub fn episode_seed(base: u64, env_index: usize, episode: u64) -> u64 {
    let mut z = base ^ (env_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ episode.wrapping_mul(0xd1b5_4a32_d192_ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub env_index: usize,
    /// Sum of the environment's (scaled) reward.
    pub extrinsic_return: f64,
    pub length: u64,
    pub success: bool,
    pub progress: Progress,
}

/// One environment instance with its in-progress episode state.
pub struct EnvSlot {
    pub index: usize,
    env: Box<dyn RolloutEnv>,
    obs: EnvObs,
    base_seed: u64,
    episode: u64,
    ep_return: f64,
    ep_len: u64,
    counter: EpisodicCounter<String>,
}

impl EnvSlot {
    pub fn new(index: usize, mut env: Box<dyn RolloutEnv>, base_seed: u64, z: f64) -> Self {
        let obs = env.reset(episode_seed(base_seed, index, 0));
        Self { index, env, obs, base_seed, episode: 0, ep_return: 0.0, ep_len: 0, counter: EpisodicCounter::new(z) }
    }

    pub fn obs(&self) -> &EnvObs {
        &self.obs
    }

    pub fn episodes_started(&self) -> u64 {
        self.episode + 1
    }

    pub fn obs_dim(&self) -> usize {
        self.env.obs_dim()
    }
}

/// Per-step data from one slot over `T` steps under one policy version.
#[derive(Debug, Clone, Default)]
pub struct RolloutBatch {
    pub env_index: usize,
    pub version: u64,
    pub obs_dim: usize,
    /// Row-major `T × obs_dim` features of the observation acted on.
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub logp: Vec<f64>,
    pub values: Vec<f64>,
    /// Extrinsic reward of each transition.
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Caption of the observation each transition arrives at.
    pub captions: Vec<String>,
    /// Occurrences of that caption so far in its episode, including this one.
    pub caption_counts: Vec<u32>,
    /// Behavior value of the observation after the last step.
    pub bootstrap: f64,
    pub episodes: Vec<EpisodeSummary>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs_row(&self, t: usize) -> &[f64] {
        &self.obs[t * self.obs_dim..(t + 1) * self.obs_dim]
    }
}

/// Steps one slot `t` times with actions sampled from the snapshot. Finished
/// episodes reset automatically.
pub fn collect_rollout<R: Rng + ?Sized>(slot: &mut EnvSlot, snapshot: &PolicySnapshot, t: usize, rng: &mut R) -> RolloutBatch {
    let dim = slot.env.obs_dim();
    let mut b = RolloutBatch {
        env_index: slot.index,
        version: snapshot.version,
        obs_dim: dim,
        obs: Vec::with_capacity(t * dim),
        actions: Vec::with_capacity(t),
        logp: Vec::with_capacity(t),
        values: Vec::with_capacity(t),
        rewards: Vec::with_capacity(t),
        dones: Vec::with_capacity(t),
        captions: Vec::with_capacity(t),
        caption_counts: Vec::with_capacity(t),
        bootstrap: 0.0,
        episodes: Vec::new(),
    };
    for _ in 0..t {
        let out = snapshot.net.act(&slot.obs.features, rng);
        let step = slot.env.step(out.action);
        b.obs.extend_from_slice(&slot.obs.features);
        b.actions.push(out.action);
        b.logp.push(out.logp);
        b.values.push(out.value);
        b.rewards.push(step.reward);
        b.dones.push(step.done);
        b.caption_counts.push(slot.counter.observe(step.obs.caption.clone()));
        b.captions.push(step.obs.caption.clone());
        slot.ep_return += step.reward;
        slot.ep_len += 1;
        if step.done {
            b.episodes.push(EpisodeSummary {
                env_index: slot.index,
                extrinsic_return: slot.ep_return,
                length: slot.ep_len,
                success: step.success,
                progress: step.progress,
            });
            slot.episode += 1;
            slot.ep_return = 0.0;
            slot.ep_len = 0;
            slot.counter.reset();
            slot.obs = slot.env.reset(episode_seed(slot.base_seed, slot.index, slot.episode));
        } else {
            slot.obs = step.obs;
        }
    }
    b.bootstrap = snapshot.net.value_of(&slot.obs.features);
    b
}

pub fn collect_rollouts<R: Rng + ?Sized>(slots: &mut [EnvSlot], snapshot: &PolicySnapshot, t: usize, rng: &mut R) -> Vec<RolloutBatch> {
    slots.iter_mut().map(|s| collect_rollout(s, snapshot, t, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appo::env::Corridor;
    use crate::appo::policy::ActorCritic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn done_resets_and_stamps_version() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = ActorCritic::new(4, 5, &[8], &mut rng);
        let snap = PolicySnapshot::new(net, 7);
        let mut slot = EnvSlot::new(0, Box::new(Corridor::new(2, 3)), 1, 3.0);
        let b = collect_rollout(&mut slot, &snap, 40, &mut rng);
        assert_eq!(b.version, 7);
        assert_eq!(b.len(), 40);
        assert!(b.dones.iter().any(|&d| d));
        assert_eq!(b.episodes.len(), b.dones.iter().filter(|&&d| d).count());
        // The step after a done starts from the reset observation.
        let t = b.dones.iter().position(|&d| d).unwrap();
        assert_eq!(b.obs_row(t + 1), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn caption_counts_restart_each_episode() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = ActorCritic::new(4, 5, &[8], &mut rng);
        let snap = PolicySnapshot::new(net, 0);
        let mut slot = EnvSlot::new(0, Box::new(Corridor::new(2, 3)), 1, 3.0);
        let b = collect_rollout(&mut slot, &snap, 60, &mut rng);
        let mut n = 0;
        for t in 0..b.len() {
            n += 1;
            if b.captions[t].is_empty() {
                assert!(b.caption_counts[t] <= n);
            } else {
                assert_eq!(b.caption_counts[t], 1, "the goal caption ends its episode");
            }
            if b.dones[t] {
                n = 0;
            }
        }
    }
}
