//! Asynchronous PPO: environments, rollouts, advantage estimation, the
//! clipped update and staleness control.

pub mod env;
pub mod gae;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod staleness;

pub use env::{CavernsEnv, Corridor, EnvObs, EnvStep, RolloutEnv};
pub use gae::compute_gae;
pub use policy::{ActOutput, ActorCritic, PolicySnapshot};
pub use ppo::{clipped_surrogate, clipped_value_loss, ppo_gradients, ppo_loss, ppo_loss_pattern, LossParts, PpoBuffer, PpoConfig, PpoLearner, PpoStats};
pub use rollout::{collect_rollout, collect_rollouts, episode_seed, EnvSlot, EpisodeSummary, RolloutBatch};
pub use staleness::{enforce_staleness, StalenessDecision, StalenessTracker};

/// Appends a rollout to the buffer with GAE computed from `rewards`, the
/// per-step training reward (extrinsic plus any intrinsic term).
pub fn push_rollout(buf: &mut PpoBuffer, batch: &RolloutBatch, rewards: &[f64], cfg: &PpoConfig) {
    assert_eq!(rewards.len(), batch.len(), "one reward per step");
    assert_eq!(buf.obs_dim, batch.obs_dim, "observation width mismatch");
    let (adv, ret) = compute_gae(rewards, &batch.values, &batch.dones, batch.bootstrap, cfg.gamma, cfg.lambda);
    buf.obs.extend_from_slice(&batch.obs);
    buf.actions.extend_from_slice(&batch.actions);
    buf.logp.extend_from_slice(&batch.logp);
    buf.values.extend_from_slice(&batch.values);
    buf.advantages.extend(adv);
    buf.returns.extend(ret);
}
