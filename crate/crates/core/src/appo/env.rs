//! Environments as seen by rollout workers.

use caverns::{policy_features, Action, Caverns, EnvParams, Progress, TaskSpec, FEATURE_DIM, NUM_ACTIONS};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvObs {
    pub features: Vec<f64>,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub obs: EnvObs,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    /// Game-progress counters; filled by environments that track them.
    pub progress: Progress,
}

pub trait RolloutEnv: Send {
    fn obs_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn reset(&mut self, seed: u64) -> EnvObs;
    /// Steps an episode that is not over.
    fn step(&mut self, action: usize) -> EnvStep;
}

pub struct CavernsEnv {
    env: Caverns,
    task: TaskSpec,
}

impl CavernsEnv {
    pub fn new(params: EnvParams, task: TaskSpec) -> Self {
        Self { env: Caverns::new(params), task }
    }

    pub fn inner(&self) -> &Caverns {
        &self.env
    }
}

impl RolloutEnv for CavernsEnv {
    fn obs_dim(&self) -> usize {
        FEATURE_DIM
    }

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn reset(&mut self, seed: u64) -> EnvObs {
        let obs = self.env.reset(seed, self.task);
        EnvObs { features: policy_features(&obs), caption: obs.caption }
    }

    fn step(&mut self, action: usize) -> EnvStep {
        let r = self.env.step(Action::from_index(action)).expect("rollout steps only live episodes");
        let features = policy_features(&r.observation);
        EnvStep {
            obs: EnvObs { features, caption: r.observation.caption },
            reward: r.reward,
            done: r.done,
            success: r.success,
            progress: r.progress,
        }
    }
}

/// A `side`×`side` grid walked from the top-left to the bottom-right corner.
/// Each step that brings the agent further along `x + y` than it has been
/// this episode pays the gain; reaching the far corner ends the episode.
/// Actions: 0 west, 1 east, 2 north, 3 south, 4 stay. The optimal return is
/// `2 * (side - 1)`.
#[derive(Debug, Clone)]
pub struct Corridor {
    side: usize,
    max_steps: usize,
    x: usize,
    y: usize,
    best: usize,
    steps: usize,
}

impl Corridor {
    pub fn new(side: usize, max_steps: usize) -> Self {
        assert!(side >= 2);
        Self { side, max_steps, x: 0, y: 0, best: 0, steps: 0 }
    }

    pub fn optimal_return(&self) -> f64 {
        (2 * (self.side - 1)) as f64
    }

    fn at_goal(&self) -> bool {
        self.x == self.side - 1 && self.y == self.side - 1
    }

    fn obs(&self) -> EnvObs {
        let mut features = vec![0.0; self.side * self.side];
        features[self.y * self.side + self.x] = 1.0;
        let caption = if self.at_goal() { "You reach the end.".to_string() } else { String::new() };
        EnvObs { features, caption }
    }
}

impl RolloutEnv for Corridor {
    fn obs_dim(&self) -> usize {
        self.side * self.side
    }

    fn num_actions(&self) -> usize {
        5
    }

    fn reset(&mut self, _seed: u64) -> EnvObs {
        self.x = 0;
        self.y = 0;
        self.best = 0;
        self.steps = 0;
        self.obs()
    }

    fn step(&mut self, action: usize) -> EnvStep {
        self.steps += 1;
        let last = self.side - 1;
        match action {
            0 => self.x = self.x.saturating_sub(1),
            1 => self.x = (self.x + 1).min(last),
            2 => self.y = self.y.saturating_sub(1),
            3 => self.y = (self.y + 1).min(last),
            _ => {}
        }
        let mut reward = 0.0;
        if self.x + self.y > self.best {
            reward = (self.x + self.y - self.best) as f64;
            self.best = self.x + self.y;
        }
        let success = self.at_goal();
        let done = success || self.steps >= self.max_steps;
        EnvStep { obs: self.obs(), reward, done, success, progress: Progress::default() }
    }
}

/// Builds one environment per slot.
pub type EnvFactory = dyn Fn(usize) -> Box<dyn RolloutEnv> + Send + Sync;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_optimal_path() {
        let mut c = Corridor::new(5, 50);
        c.reset(0);
        let mut ret = 0.0;
        for a in [1, 1, 1, 1, 3, 3, 3, 3] {
            let s = c.step(a);
            ret += s.reward;
            assert_eq!(s.done, s.success);
        }
        assert_eq!(ret, c.optimal_return());
        assert!(c.at_goal());
    }

    #[test]
    fn corridor_no_reward_for_backtracking() {
        let mut c = Corridor::new(5, 50);
        c.reset(0);
        assert_eq!(c.step(1).reward, 1.0);
        assert_eq!(c.step(0).reward, 0.0);
        assert_eq!(c.step(3).reward, 0.0);
        assert_eq!(c.step(1).reward, 1.0);
    }
}
