//! Run configuration: a flat `key = value` file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use caverns::{EnvParams, TaskSpec};

use crate::annotate::backend::HttpConfig;
use crate::annotate::GoalVariant;
use crate::appo::PpoConfig;
use crate::rewards::{ConfigError, IntrinsicConfig, RewardKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Mock,
    Http,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Mock => "mock",
            Backend::Http => "http",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(Backend::Mock),
            "http" => Ok(Backend::Http),
            _ => Err(format!("unknown annotator backend {s:?} (expected mock, http)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Single thread, fully deterministic under the seed.
    Sync,
    /// Rollout workers, learner, annotation worker and feedback thread.
    Threaded,
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecMode::Sync => "sync",
            ExecMode::Threaded => "threaded",
        })
    }
}

impl FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sync" => Ok(ExecMode::Sync),
            "threaded" => Ok(ExecMode::Threaded),
            _ => Err(format!("unknown mode {s:?} (expected sync, threaded)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorConfig {
    pub backend: Backend,
    pub url: String,
    pub model: String,
    pub batch_size: usize,
    pub subsample_rate: f64,
    /// Mock only: delay per batch.
    pub latency: Duration,
    pub timeout: Duration,
    pub queue_capacity: usize,
    pub goal: GoalVariant,
    /// Draw ranking pairs from distinct captions instead of all observations.
    pub pair_dedup: bool,
}

impl Default for AnnotatorConfig {
    fn default() -> Self {
        let http = HttpConfig::default();
        Self {
            backend: Backend::Mock,
            url: http.url,
            model: http.model,
            batch_size: 100,
            subsample_rate: 1.0,
            latency: Duration::ZERO,
            timeout: http.timeout,
            queue_capacity: 10_000,
            goal: GoalVariant::Default,
            pair_dedup: false,
        }
    }
}

impl AnnotatorConfig {
    pub fn http_config(&self) -> HttpConfig {
        HttpConfig { url: self.url.clone(), model: self.model.clone(), timeout: self.timeout, ..HttpConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: TaskSpec,
    pub steps: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub mode: ExecMode,
    pub reward: IntrinsicConfig,
    /// Set when `reward.beta` was given explicitly; otherwise the default
    /// for the kind and task applies.
    pub beta_override: Option<f64>,
    pub reward_lr: Option<f64>,
    /// Annotations needed before the reward model trains continuously.
    pub warmup: usize,
    /// Reward-model updates per received annotation batch below warmup.
    pub burst_updates: usize,
    /// Reward-model updates per learner iteration at or above warmup.
    pub continuous_updates: usize,
    pub annotator: AnnotatorConfig,
    pub ppo: PpoConfig,
    pub env: EnvParams,
    pub rollout_workers: usize,
    /// Annotation batches processed per learner iteration in sync mode.
    pub sync_annotation_batches: usize,
    /// Episodes in the sliding window behind episode metrics.
    pub metrics_window: usize,
    /// Write a checkpoint every this many env steps; 0 writes only the final one.
    pub checkpoint_every: u64,
    /// Stop after this much wall time even if `steps` is not reached.
    pub max_seconds: Option<f64>,
    pub resume_from: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let task = TaskSpec::staircase(3);
        Self {
            task,
            steps: 2_000_000,
            seed: 0,
            out: PathBuf::from("runs/default"),
            mode: ExecMode::Threaded,
            reward: IntrinsicConfig::defaults(RewardKind::Classification, task.is_sparse()),
            beta_override: None,
            reward_lr: None,
            warmup: 2_500,
            burst_updates: 4,
            continuous_updates: 1,
            annotator: AnnotatorConfig::default(),
            ppo: PpoConfig::default(),
            env: EnvParams::default(),
            rollout_workers: 2,
            sync_annotation_batches: 1,
            metrics_window: 100,
            checkpoint_every: 0,
            max_seconds: None,
            resume_from: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "task",
    "steps",
    "seed",
    "out",
    "mode",
    "reward.kind",
    "reward.beta",
    "reward.eta",
    "reward.z",
    "reward.nu",
    "reward.lr",
    "reward.bow_dim",
    "reward.bow_seed",
    "warmup",
    "reward.burst_updates",
    "reward.continuous_updates",
    "annotator.backend",
    "annotator.url",
    "annotator.model",
    "annotator.batch_size",
    "annotator.subsample_rate",
    "annotator.latency_ms",
    "annotator.timeout_s",
    "queue.capacity",
    "goal.variant",
    "ranking.pair_dedup",
    "ppo.clip",
    "ppo.value_clip",
    "ppo.epochs",
    "ppo.batch",
    "ppo.minibatch",
    "ppo.max_grad_norm",
    "ppo.value_coef",
    "ppo.entropy_coef",
    "ppo.gamma",
    "ppo.lambda",
    "ppo.lr",
    "ppo.num_envs",
    "ppo.rollout_len",
    "ppo.max_staleness",
    "ppo.hidden",
    "env.max_steps",
    "workers",
    "sync.annotation_batches",
    "metrics.window",
    "checkpoint_every",
    "max_seconds",
    "resume_from",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::new(key, format!("cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::new(key, format!("expected true or false, got {value:?}"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "task" => self.task = parse(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "mode" => self.mode = parse(key, v)?,
            "reward.kind" => self.reward.kind = parse(key, v)?,
            "reward.beta" => self.beta_override = Some(parse(key, v)?),
            "reward.eta" => self.reward.eta = parse(key, v)?,
            "reward.z" => self.reward.z = parse(key, v)?,
            "reward.nu" => self.reward.nu = parse(key, v)?,
            "reward.lr" => self.reward_lr = Some(parse(key, v)?),
            "reward.bow_dim" => self.reward.bow_dim = parse(key, v)?,
            "reward.bow_seed" => self.reward.bow_seed = parse(key, v)?,
            "warmup" => self.warmup = parse(key, v)?,
            "reward.burst_updates" => self.burst_updates = parse(key, v)?,
            "reward.continuous_updates" => self.continuous_updates = parse(key, v)?,
            "annotator.backend" => self.annotator.backend = parse(key, v)?,
            "annotator.url" => self.annotator.url = v.to_string(),
            "annotator.model" => self.annotator.model = v.to_string(),
            "annotator.batch_size" => self.annotator.batch_size = parse(key, v)?,
            "annotator.subsample_rate" => self.annotator.subsample_rate = parse(key, v)?,
            "annotator.latency_ms" => self.annotator.latency = Duration::from_millis(parse(key, v)?),
            "annotator.timeout_s" => self.annotator.timeout = Duration::from_secs_f64(parse::<f64>(key, v)?.max(0.0)),
            "queue.capacity" => self.annotator.queue_capacity = parse(key, v)?,
            "goal.variant" => self.annotator.goal = parse(key, v)?,
            "ranking.pair_dedup" => self.annotator.pair_dedup = parse_bool(key, v)?,
            "ppo.clip" => self.ppo.clip = parse(key, v)?,
            "ppo.value_clip" => self.ppo.value_clip = parse(key, v)?,
            "ppo.epochs" => self.ppo.epochs = parse(key, v)?,
            "ppo.batch" => self.ppo.batch = parse(key, v)?,
            "ppo.minibatch" => self.ppo.minibatch = parse(key, v)?,
            "ppo.max_grad_norm" => self.ppo.max_grad_norm = parse(key, v)?,
            "ppo.value_coef" => self.ppo.value_coef = parse(key, v)?,
            "ppo.entropy_coef" => self.ppo.entropy_coef = parse(key, v)?,
            "ppo.gamma" => self.ppo.gamma = parse(key, v)?,
            "ppo.lambda" => self.ppo.lambda = parse(key, v)?,
            "ppo.lr" => self.ppo.lr = parse(key, v)?,
            "ppo.num_envs" => self.ppo.num_envs = parse(key, v)?,
            "ppo.rollout_len" => self.ppo.rollout_len = parse(key, v)?,
            "ppo.max_staleness" => self.ppo.max_staleness = parse(key, v)?,
            "ppo.hidden" => {
                self.ppo.hidden = v.split(',').map(|s| parse::<usize>(key, s.trim())).collect::<Result<_, _>>()?;
            }
            "env.max_steps" => self.env.max_steps = parse(key, v)?,
            "workers" => self.rollout_workers = parse(key, v)?,
            "sync.annotation_batches" => self.sync_annotation_batches = parse(key, v)?,
            "metrics.window" => self.metrics_window = parse(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "max_seconds" => self.max_seconds = if v == "none" { None } else { Some(parse(key, v)?) },
            "resume_from" => self.resume_from = if v == "none" { None } else { Some(PathBuf::from(v)) },
            _ => return Err(ConfigError::new(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(&format!("line {}", i + 1), format!("expected key = value, got {raw:?}")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    /// Beta after applying the kind and task defaults.
    pub fn effective_beta(&self) -> f64 {
        self.beta_override.unwrap_or_else(|| IntrinsicConfig::defaults(self.reward.kind, self.task.is_sparse()).beta)
    }

    /// The intrinsic configuration with the effective beta filled in.
    pub fn intrinsic(&self) -> IntrinsicConfig {
        IntrinsicConfig { beta: self.effective_beta(), ..self.reward.clone() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.intrinsic().validate()?;
        self.ppo.validate()?;
        if self.steps == 0 {
            return Err(ConfigError::new("steps", "steps must be positive"));
        }
        if self.annotator.batch_size == 0 {
            return Err(ConfigError::new("annotator.batch_size", "batch_size must be positive"));
        }
        let r = self.annotator.subsample_rate;
        if !(r > 0.0 && r <= 1.0) {
            return Err(ConfigError::new("annotator.subsample_rate", format!("subsample_rate must lie in (0,1], got {r}")));
        }
        if self.annotator.queue_capacity == 0 {
            return Err(ConfigError::new("queue.capacity", "capacity must be positive"));
        }
        if self.annotator.backend == Backend::Http && self.annotator.url.is_empty() {
            return Err(ConfigError::new("annotator.url", "the http backend needs a url"));
        }
        if self.env.max_steps == 0 {
            return Err(ConfigError::new("env.max_steps", "max_steps must be positive"));
        }
        if self.rollout_workers == 0 {
            return Err(ConfigError::new("workers", "at least one rollout worker is needed"));
        }
        if self.metrics_window == 0 {
            return Err(ConfigError::new("metrics.window", "window must be positive"));
        }
        if let Some(lr) = self.reward_lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(ConfigError::new("reward.lr", format!("lr must be > 0, got {lr}")));
            }
        }
        if let Some(s) = self.max_seconds {
            if !(s > 0.0) {
                return Err(ConfigError::new("max_seconds", format!("max_seconds must be > 0, got {s}")));
            }
        }
        Ok(())
    }

    /// Serializes every key so that [`RunConfig::parse_text`] restores the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("task", self.task.to_string());
        put("steps", self.steps.to_string());
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        put("mode", self.mode.to_string());
        put("reward.kind", self.reward.kind.to_string());
        put("reward.beta", format!("{:?}", self.effective_beta()));
        put("reward.eta", format!("{:?}", self.reward.eta));
        put("reward.z", format!("{:?}", self.reward.z));
        put("reward.nu", format!("{:?}", self.reward.nu));
        if let Some(lr) = self.reward_lr {
            put("reward.lr", format!("{lr:?}"));
        }
        put("reward.bow_dim", self.reward.bow_dim.to_string());
        put("reward.bow_seed", self.reward.bow_seed.to_string());
        put("warmup", self.warmup.to_string());
        put("reward.burst_updates", self.burst_updates.to_string());
        put("reward.continuous_updates", self.continuous_updates.to_string());
        put("annotator.backend", self.annotator.backend.to_string());
        put("annotator.url", self.annotator.url.clone());
        put("annotator.model", self.annotator.model.clone());
        put("annotator.batch_size", self.annotator.batch_size.to_string());
        put("annotator.subsample_rate", format!("{:?}", self.annotator.subsample_rate));
        put("annotator.latency_ms", self.annotator.latency.as_millis().to_string());
        put("annotator.timeout_s", format!("{:?}", self.annotator.timeout.as_secs_f64()));
        put("queue.capacity", self.annotator.queue_capacity.to_string());
        put("goal.variant", self.annotator.goal.to_string());
        put("ranking.pair_dedup", self.annotator.pair_dedup.to_string());
        let p = &self.ppo;
        put("ppo.clip", format!("{:?}", p.clip));
        put("ppo.value_clip", format!("{:?}", p.value_clip));
        put("ppo.epochs", p.epochs.to_string());
        put("ppo.batch", p.batch.to_string());
        put("ppo.minibatch", p.minibatch.to_string());
        put("ppo.max_grad_norm", format!("{:?}", p.max_grad_norm));
        put("ppo.value_coef", format!("{:?}", p.value_coef));
        put("ppo.entropy_coef", format!("{:?}", p.entropy_coef));
        put("ppo.gamma", format!("{:?}", p.gamma));
        put("ppo.lambda", format!("{:?}", p.lambda));
        put("ppo.lr", format!("{:?}", p.lr));
        put("ppo.num_envs", p.num_envs.to_string());
        put("ppo.rollout_len", p.rollout_len.to_string());
        put("ppo.max_staleness", p.max_staleness.to_string());
        put("ppo.hidden", p.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","));
        put("env.max_steps", self.env.max_steps.to_string());
        put("workers", self.rollout_workers.to_string());
        put("sync.annotation_batches", self.sync_annotation_batches.to_string());
        put("metrics.window", self.metrics_window.to_string());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("max_seconds", self.max_seconds.map_or("none".into(), |s| format!("{s:?}")));
        put("resume_from", self.resume_from.as_ref().map_or("none".into(), |p| p.display().to_string()));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set("reward.kind", "ranking").unwrap();
        c.set("reward.beta", "0.05").unwrap();
        c.set("ppo.hidden", "32,16").unwrap();
        c.set("annotator.latency_ms", "500").unwrap();
        c.set("max_seconds", "12.5").unwrap();
        let back = RunConfig::parse_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn every_listed_key_is_accepted_by_set() {
        let text = RunConfig::default().to_text();
        for line in text.lines() {
            let key = line.split_once('=').unwrap().0.trim();
            assert!(CONFIG_KEYS.contains(&key), "{key} missing from CONFIG_KEYS");
        }
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = RunConfig::default();
        assert_eq!(c.set("ppo.clip", "abc").unwrap_err().key, "ppo.clip");
        assert_eq!(c.set("nonsense", "1").unwrap_err().key, "nonsense");
        c.set("reward.eta", "1.5").unwrap();
        assert_eq!(c.validate().unwrap_err().key, "reward.eta");
    }

    #[test]
    fn beta_follows_kind_unless_set() {
        let mut c = RunConfig::default();
        c.set("reward.kind", "retrieval").unwrap();
        assert_eq!(c.effective_beta(), 0.5);
        c.set("task", "score").unwrap();
        assert_eq!(c.effective_beta(), 0.1);
        c.set("reward.beta", "0.3").unwrap();
        assert_eq!(c.effective_beta(), 0.3);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = RunConfig::parse_text("# run\n\nsteps = 1000  # short\nseed=4\n").unwrap();
        assert_eq!((c.steps, c.seed), (1000, 4));
        assert!(RunConfig::parse_text("steps 1000").is_err());
    }
}
