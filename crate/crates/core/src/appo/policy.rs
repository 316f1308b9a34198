//! Actor-critic networks and versioned parameter snapshots.

use std::sync::Arc;

use rand::Rng;
use tinynn::{log_softmax, Head, Input, Mlp};

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    /// Softmax policy over discrete actions.
    pub policy: Mlp,
    /// Linear state-value head.
    pub value: Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActOutput {
    pub action: usize,
    pub logp: f64,
    pub value: f64,
}

impl ActorCritic {
    /// Two separate MLPs with `hidden` layers. The policy's output layer is
    /// scaled down so the initial policy is close to uniform.
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, num_actions: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        let mut psizes = sizes.clone();
        psizes.push(num_actions);
        let mut vsizes = sizes;
        vsizes.push(1);
        let mut policy = Mlp::new(&psizes, Head::Softmax, rng);
        policy.scale_output_layer(0.01);
        let value = Mlp::new(&vsizes, Head::Linear, rng);
        Self { policy, value }
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn log_probs(&self, obs: &[f64]) -> Vec<f64> {
        log_softmax(self.policy.forward(Input::Dense(obs)).logits())
    }

    pub fn value_of(&self, obs: &[f64]) -> f64 {
        self.value.forward(Input::Dense(obs)).output()[0]
    }

    /// Samples an action from the softmax policy.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> ActOutput {
        let lp = self.log_probs(obs);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut action = lp.len() - 1;
        for (i, l) in lp.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                action = i;
                break;
            }
        }
        ActOutput { action, logp: lp[action], value: self.value_of(obs) }
    }

    pub fn greedy(&self, obs: &[f64]) -> usize {
        let lp = self.log_probs(obs);
        let mut best = 0;
        for (i, &l) in lp.iter().enumerate() {
            if l > lp[best] {
                best = i;
            }
        }
        best
    }
}

/// Immutable parameters stamped with the learner version that produced them.
#[derive(Debug, Clone)]
pub struct PolicySnapshot {
    pub net: Arc<ActorCritic>,
    pub version: u64,
}

impl PolicySnapshot {
    pub fn new(net: ActorCritic, version: u64) -> Self {
        Self { net: Arc::new(net), version }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_policy_is_near_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ac = ActorCritic::new(10, 4, &[16, 16], &mut rng);
        let obs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        for l in ac.log_probs(&obs) {
            assert!((l.exp() - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn act_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ac = ActorCritic::new(3, 5, &[8], &mut rng);
        let a: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..20).map(|_| ac.act(&[1.0, 0.0, -1.0], &mut r).action).collect()
        };
        let b: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..20).map(|_| ac.act(&[1.0, 0.0, -1.0], &mut r).action).collect()
        };
        assert_eq!(a, b);
    }
}
