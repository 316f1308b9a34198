//! Training runs: setup shared by both execution modes and the
//! deterministic single-threaded loop.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Instant;

use caverns::{FEATURE_DIM, NUM_ACTIONS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use tinynn::{Checkpoint, CheckpointError, Mlp};

use super::config::{ExecMode, RunConfig};
use super::metrics::{EpisodeLog, EpisodeWindow, MetricsRow, MetricsWriter, RunSummary};
use super::pipeline::{make_backend, store_results, CaptionInterner, RetryList};
use super::synth::RewardSynth;
use super::warmup::{warmup_gate, UpdateMode, WarmupInstrumentation};
use crate::annotate::{annotate_batch, AnnotationItem, AnnotationStore, Annotator, CandidateQueue, PairPool, StoreError};
use crate::appo::{
    collect_rollouts, push_rollout, ActorCritic, CavernsEnv, EnvSlot, PolicySnapshot, PpoBuffer, PpoLearner, PpoStats, StalenessTracker,
};
use crate::rewards::{ConfigError, ModelKind, RewardKind, RewardLearner, RewardSnapshot};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("annotator backend: {0}")]
    Backend(String),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("annotation store: {0}")]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn metrics_path(&self) -> PathBuf {
        self.out_dir.join("metrics.csv")
    }
}

// Independent random streams derived from the run seed.
pub(crate) const STREAM_INIT: u64 = 0x1111;
pub(crate) const STREAM_ROLLOUT: u64 = 0x2222;
pub(crate) const STREAM_LEARN: u64 = 0x3333;
pub(crate) const STREAM_REWARD: u64 = 0x4444;
pub(crate) const STREAM_ANNOTATE: u64 = 0x5555;

pub(crate) fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r
}

pub(crate) fn model_kind(kind: RewardKind) -> Option<ModelKind> {
    match kind {
        RewardKind::Classification | RewardKind::ClassificationReal => Some(ModelKind::Classifier),
        RewardKind::Ranking => Some(ModelKind::Ranker),
        _ => None,
    }
}

/// Store size that counts toward the warmup threshold for `kind`.
pub(crate) fn store_size_for(kind: RewardKind, store: &AnnotationStore) -> usize {
    if kind == RewardKind::Ranking {
        store.preference_len()
    } else {
        store.binary_len()
    }
}

/// Networks created from the seed, optionally overwritten from a checkpoint.
pub(crate) fn init_models(cfg: &RunConfig) -> Result<(ActorCritic, Option<RewardLearner>), RunError> {
    let mut rng = stream(cfg.seed, STREAM_INIT);
    let mut net = ActorCritic::new(FEATURE_DIM, NUM_ACTIONS, &cfg.ppo.hidden, &mut rng);
    let mut reward = model_kind(cfg.reward.kind).map(|k| {
        let lr = cfg.reward_lr.unwrap_or_else(|| RewardLearner::default_lr(k));
        RewardLearner::new(k, lr, &mut rng)
    });
    if let Some(path) = &cfg.resume_from {
        let ck = read_checkpoint(path)?;
        let take = |name: &str, like: &Mlp| -> Result<Mlp, RunError> {
            let m = ck.model(name).ok_or_else(|| CheckpointError::Header(format!("missing model {name}")))?;
            if m.sizes() != like.sizes() || m.head() != like.head() {
                return Err(CheckpointError::Header(format!("model {name} has a different shape")).into());
            }
            Ok(m.clone())
        };
        net.policy = take("policy", &net.policy)?;
        net.value = take("value", &net.value)?;
        if let Some(r) = reward.as_mut() {
            let lr = cfg.reward_lr.unwrap_or_else(|| RewardLearner::default_lr(r.kind()));
            *r = RewardLearner::from_model(r.kind(), take("reward", r.model())?, lr);
        }
    }
    Ok((net, reward))
}

pub(crate) fn build_slots(cfg: &RunConfig) -> Vec<EnvSlot> {
    (0..cfg.ppo.num_envs)
        .map(|i| EnvSlot::new(i, Box::new(CavernsEnv::new(cfg.env.clone(), cfg.task)), cfg.seed, cfg.reward.z))
        .collect()
}

pub fn write_checkpoint(path: &Path, seed: u64, step: u64, net: &ActorCritic, reward: Option<&Mlp>) -> Result<(), RunError> {
    let mut models = vec![("policy".to_string(), net.policy.clone()), ("value".to_string(), net.value.clone())];
    if let Some(r) = reward {
        models.push(("reward".to_string(), r.clone()));
    }
    let ck = Checkpoint { seed, step, models };
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    ck.write_to(&mut w)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, RunError> {
    let r = std::io::BufReader::new(fs::File::open(path)?);
    Ok(Checkpoint::read_from(r)?)
}

pub(crate) fn prepare_out_dir(cfg: &RunConfig) -> Result<(), RunError> {
    fs::create_dir_all(cfg.out.join("checkpoints"))?;
    fs::write(cfg.out.join("config.txt"), cfg.to_text())?;
    Ok(())
}

/// Validates the config, prepares the output directory and runs in the
/// configured mode with the configured annotator.
pub fn run_training(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let backend = if cfg.reward.kind.uses_annotator() { Some(make_backend(&cfg.annotator).map_err(RunError::Backend)?) } else { None };
    run_training_with(cfg, backend)
}

/// Like [`run_training`] with an explicit annotator (or none).
pub fn run_training_with(cfg: &RunConfig, backend: Option<Arc<dyn Annotator>>) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    prepare_out_dir(cfg)?;
    let summary = match cfg.mode {
        ExecMode::Sync => run_sync(cfg, backend)?,
        ExecMode::Threaded => super::threaded::run_threaded(cfg, backend)?,
    };
    summary.write_json(&cfg.out.join("summary.json"))?;
    Ok(RunOutcome { summary, out_dir: cfg.out.clone() })
}

/// Annotation-side state of the sync loop.
struct SyncAnnotation {
    queue: CandidateQueue<String>,
    pairs: PairPool,
    interner: CaptionInterner,
    retry: RetryList,
    annotated: u64,
    requests: u64,
    parse_drops: u64,
    transport_drops: u64,
    stalled: bool,
}

fn run_sync(cfg: &RunConfig, backend: Option<Arc<dyn Annotator>>) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let kind = cfg.reward.kind;
    let (net, mut reward_learner) = init_models(cfg)?;
    let mut learner = PpoLearner::new(net, cfg.ppo.clone());
    let mut reward_snap: Option<RewardSnapshot> = reward_learner.as_ref().map(|r| r.snapshot());
    let mut slots = build_slots(cfg);
    let mut rng_rollout = stream(cfg.seed, STREAM_ROLLOUT);
    let mut rng_learn = stream(cfg.seed, STREAM_LEARN);
    let mut rng_reward = stream(cfg.seed, STREAM_REWARD);
    let mut rng_annotate = stream(cfg.seed, STREAM_ANNOTATE);
    let mut synth = RewardSynth::new(cfg.intrinsic(), cfg.annotator.goal);
    let mut store = AnnotationStore::new();
    let mut ann = SyncAnnotation {
        queue: CandidateQueue::new(cfg.annotator.queue_capacity, true),
        pairs: PairPool::new(cfg.annotator.pair_dedup),
        interner: CaptionInterner::new(),
        retry: RetryList::default(),
        annotated: 0,
        requests: 0,
        parse_drops: 0,
        transport_drops: 0,
        stalled: false,
    };
    let instr = WarmupInstrumentation::new();
    let mut staleness = StalenessTracker::new(cfg.ppo.max_staleness);
    let mut window = EpisodeWindow::new(cfg.metrics_window);
    let mut log = EpisodeLog::default();
    let mut writer = MetricsWriter::create(&cfg.out.join("metrics.csv"), true)?;
    let cancel = AtomicBool::new(false);
    let mut steps: u64 = 0;
    let mut next_ckpt = if cfg.checkpoint_every > 0 { cfg.checkpoint_every } else { u64::MAX };
    let mut skipped_updates = 0;

    while steps < cfg.steps {
        if cfg.max_seconds.is_some_and(|s| start.elapsed().as_secs_f64() >= s) {
            break;
        }
        let snap = PolicySnapshot::new(learner.net.clone(), learner.version());
        let mut buf = PpoBuffer::new(FEATURE_DIM);
        let mut intrinsic_sum = 0.0;
        let mut iter_steps = 0u64;
        while buf.len() < cfg.ppo.batch {
            for b in collect_rollouts(&mut slots, &snap, cfg.ppo.rollout_len, &mut rng_rollout) {
                if !staleness.check(b.version, learner.version()) {
                    continue;
                }
                let syn = synth.synthesize(&b, &store, reward_snap.as_ref(), &mut |c: &str| {
                    if kind == RewardKind::Ranking {
                        let id = ann.interner.intern(c);
                        ann.pairs.push(id);
                    } else {
                        ann.queue.enqueue(c.to_string());
                    }
                });
                intrinsic_sum += syn.intrinsic_sum;
                push_rollout(&mut buf, &b, &syn.rewards, &cfg.ppo);
                steps += b.len() as u64;
                iter_steps += b.len() as u64;
                for e in b.episodes {
                    window.push(e.clone());
                    log.push(steps, e);
                }
            }
        }

        // Training path: continuous reward-model updates once warmed up.
        if let Some(rl) = reward_learner.as_mut() {
            let size = store_size_for(kind, &store);
            if warmup_gate(kind, size, cfg.warmup) == UpdateMode::Continuous {
                for _ in 0..cfg.continuous_updates {
                    instr.record_continuous(size, cfg.warmup);
                    rl.update_from_store(&store, &mut rng_reward);
                }
                reward_snap = Some(rl.snapshot());
            }
        }
        let stats: PpoStats = learner.update(&mut buf, &mut rng_learn);
        skipped_updates += stats.skipped;

        // Feedback path: a fixed annotation budget per iteration.
        if let Some(backend) = backend.as_deref() {
            for _ in 0..cfg.sync_annotation_batches {
                let bs = cfg.annotator.batch_size;
                let mut items = ann.retry.take(bs);
                if kind == RewardKind::Ranking {
                    while items.len() < bs {
                        match ann.pairs.sample(&mut rng_annotate) {
                            Some((a, b)) => items.push(AnnotationItem::Pair(ann.interner.text(a).into(), ann.interner.text(b).into())),
                            None => break,
                        }
                    }
                } else {
                    let room = bs - items.len();
                    items.extend(ann.queue.pop_batch(room).into_iter().map(AnnotationItem::Caption));
                }
                if items.is_empty() {
                    break;
                }
                let outcome = annotate_batch(&items, backend, cfg.annotator.goal, &cancel);
                ann.requests += outcome.requests;
                ann.parse_drops += outcome.parse_drops;
                ann.stalled = !outcome.transport_failed.is_empty() && outcome.transport_failed.len() == items.len();
                ann.transport_drops += ann.retry.failed(outcome.transport_failed);
                let received = !outcome.results.is_empty();
                ann.annotated += store_results(outcome.results, cfg.annotator.subsample_rate, &mut rng_annotate, &mut store, backend.id());
                if let Some(rl) = reward_learner.as_mut() {
                    if received && warmup_gate(kind, store_size_for(kind, &store), cfg.warmup) == UpdateMode::Burst {
                        for _ in 0..cfg.burst_updates {
                            instr.record_burst();
                            rl.update_from_store(&store, &mut rng_reward);
                        }
                        reward_snap = Some(rl.snapshot());
                    }
                }
            }
        }

        let wall = start.elapsed().as_secs_f64();
        let m = window.means();
        let qc = ann.queue.counters();
        let row = MetricsRow {
            step: steps,
            wall_s: None,
            steps_per_sec: None,
            episodes: m.episodes,
            mean_return: m.mean_return,
            success_rate: m.success_rate,
            mean_intrinsic: intrinsic_sum / iter_steps.max(1) as f64,
            store_size: store.len(),
            queue_depth: if kind == RewardKind::Ranking { ann.pairs.len() } else { ann.queue.len() },
            annotated: ann.annotated,
            annotation_requests: ann.requests,
            parse_drops: ann.parse_drops,
            transport_drops: ann.transport_drops,
            queue_evicted: qc.evicted,
            policy_version: learner.version(),
            reward_version: reward_learner.as_ref().map_or(0, |r| r.version()),
            staleness_hist: staleness.histogram_field(),
            discarded_batches: staleness.discarded(),
            burst_updates: instr.burst(),
            continuous_updates: instr.continuous(),
            mean_xl: m.xl,
            mean_dlvl: m.dlvl,
            mean_gold: m.gold,
            mean_scout: m.scout,
            mean_kills: m.kills,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            skipped_updates,
            annotator_stalled: u8::from(ann.stalled),
        };
        writer.write(&row, wall, steps as f64 / wall.max(1e-9))?;
        if steps >= next_ckpt {
            let path = cfg.out.join("checkpoints").join(format!("step_{steps}.ckpt"));
            write_checkpoint(&path, cfg.seed, steps, &learner.net, reward_learner.as_ref().map(|r| r.model()))?;
            next_ckpt += cfg.checkpoint_every;
        }
    }

    write_checkpoint(
        &cfg.out.join("checkpoints").join("final.ckpt"),
        cfg.seed,
        steps,
        &learner.net,
        reward_learner.as_ref().map(|r| r.model()),
    )?;
    if backend.is_some() {
        store.save(&cfg.out.join("store.jsonl"))?;
    }
    let wall = start.elapsed().as_secs_f64();
    let max_stale = staleness.histogram().iter().rposition(|&c| c > 0).unwrap_or(0) as u64;
    Ok(RunSummary {
        steps,
        episodes: window.total(),
        wall_seconds: wall,
        steps_per_sec: steps as f64 / wall.max(1e-9),
        final_window: log.final_window(steps),
        store_size: store.len(),
        annotated: ann.annotated,
        annotation_requests: ann.requests,
        fraction_annotated: ann.annotated as f64 / steps.max(1) as f64,
        parse_drops: ann.parse_drops,
        transport_drops: ann.transport_drops,
        queue_evicted: ann.queue.counters().evicted,
        policy_version: learner.version(),
        reward_version: reward_learner.as_ref().map_or(0, |r| r.version()),
        discarded_batches: staleness.discarded(),
        max_staleness_seen: max_stale,
        burst_updates: instr.burst(),
        continuous_updates: instr.continuous(),
        continuous_below_warmup: instr.continuous_below_warmup(),
        skipped_updates,
        annotator_stalled: ann.stalled,
    })
}
