//! Threaded execution: rollout workers, the learner (training path), an
//! annotation worker and a feedback thread (feedback path). Units exchange
//! data through bounded channels and immutable snapshots; every blocking
//! operation has a timeout so no unit can stall another.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use caverns::FEATURE_DIM;
use crossbeam_channel::{bounded, Receiver, RecvTimeoutError, SendTimeoutError, Sender};
use parking_lot::{Mutex, RwLock};

use super::config::RunConfig;
use super::metrics::{EpisodeLog, EpisodeWindow, MetricsRow, MetricsWriter, RunSummary};
use super::pipeline::{store_results, CaptionInterner, RetryList};
use super::run::{
    build_slots, init_models, store_size_for, stream, write_checkpoint, RunError, STREAM_ANNOTATE, STREAM_LEARN, STREAM_REWARD,
    STREAM_ROLLOUT,
};
use super::synth::RewardSynth;
use super::warmup::{warmup_gate, UpdateMode, WarmupInstrumentation};
use crate::annotate::{annotate_batch, AnnotationItem, AnnotationResult, AnnotationStore, Annotator, CandidateQueue, PairPool, SharedQueue};
use crate::appo::{collect_rollout, push_rollout, EnvSlot, PolicySnapshot, PpoBuffer, PpoLearner, RolloutBatch, StalenessTracker};
use crate::rewards::{RewardKind, RewardLearner, RewardSnapshot};

const POLL: Duration = Duration::from_millis(50);
/// An annotation batch in flight longer than this marks the annotator stalled.
const STALL_AFTER: Duration = Duration::from_secs(10);

struct Shared {
    stop: AtomicBool,
    policy: RwLock<PolicySnapshot>,
    store: RwLock<AnnotationStore>,
    reward_snap: RwLock<Option<RewardSnapshot>>,
    reward_learner: Mutex<Option<RewardLearner>>,
    queue: SharedQueue<String>,
    pairs: Mutex<(PairPool, CaptionInterner)>,
    produced_steps: AtomicU64,
    instr: WarmupInstrumentation,
    annotated: AtomicU64,
    requests: AtomicU64,
    parse_drops: AtomicU64,
    transport_drops: AtomicU64,
    last_batch_failed: AtomicBool,
    inflight_since: Mutex<Option<Instant>>,
}

impl Shared {
    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }

    fn stalled(&self) -> bool {
        self.last_batch_failed.load(Ordering::Relaxed) || self.inflight_since.lock().is_some_and(|t| t.elapsed() > STALL_AFTER)
    }
}

/// Sends with a bounded wait, retrying until the receiver takes the item,
/// goes away, or the run stops. Returns whether the item was delivered.
fn send_until_stopped<T>(tx: &Sender<T>, mut item: T, shared: &Shared) -> bool {
    loop {
        match tx.send_timeout(item, POLL) {
            Ok(()) => return true,
            Err(SendTimeoutError::Timeout(back)) => {
                if shared.stopped() {
                    return false;
                }
                item = back;
            }
            Err(SendTimeoutError::Disconnected(_)) => return false,
        }
    }
}

fn rollout_worker(id: usize, mut slots: Vec<EnvSlot>, cfg: RunConfig, shared: Arc<Shared>, tx: Sender<RolloutBatch>) {
    let mut rng = stream(cfg.seed, STREAM_ROLLOUT + 1 + id as u64);
    while !shared.stopped() {
        let snap = shared.policy.read().clone();
        for slot in slots.iter_mut() {
            let b = collect_rollout(slot, &snap, cfg.ppo.rollout_len, &mut rng);
            shared.produced_steps.fetch_add(b.len() as u64, Ordering::Relaxed);
            if !send_until_stopped(&tx, b, &shared) {
                return;
            }
        }
    }
}

fn annotation_worker(cfg: RunConfig, shared: Arc<Shared>, backend: Arc<dyn Annotator>, tx: Sender<Vec<AnnotationResult>>) {
    let mut rng = stream(cfg.seed, STREAM_ANNOTATE);
    let mut retry = RetryList::default();
    let bs = cfg.annotator.batch_size;
    let ranking = cfg.reward.kind == RewardKind::Ranking;
    while !shared.stopped() {
        let mut items = retry.take(bs);
        if ranking {
            let guard = shared.pairs.lock();
            let (pool, interner) = &*guard;
            while items.len() < bs {
                match pool.sample(&mut rng) {
                    Some((a, b)) => items.push(AnnotationItem::Pair(interner.text(a).into(), interner.text(b).into())),
                    None => break,
                }
            }
        } else if items.len() < bs {
            items.extend(shared.queue.pop_batch_timeout(bs - items.len(), POLL).into_iter().map(AnnotationItem::Caption));
        }
        if items.is_empty() {
            if ranking {
                thread::sleep(POLL);
            }
            continue;
        }
        *shared.inflight_since.lock() = Some(Instant::now());
        let outcome = annotate_batch(&items, backend.as_ref(), cfg.annotator.goal, &shared.stop);
        *shared.inflight_since.lock() = None;
        if shared.stopped() {
            // Items cancelled by shutdown are not transport failures.
            return;
        }
        shared.requests.fetch_add(outcome.requests, Ordering::Relaxed);
        shared.parse_drops.fetch_add(outcome.parse_drops, Ordering::Relaxed);
        let all_failed = outcome.transport_failed.len() == items.len();
        shared.last_batch_failed.store(all_failed, Ordering::Relaxed);
        let dropped = retry.failed(outcome.transport_failed);
        shared.transport_drops.fetch_add(dropped, Ordering::Relaxed);
        if !outcome.results.is_empty() && !send_until_stopped(&tx, outcome.results, &shared) {
            return;
        }
    }
}

fn feedback_thread(cfg: RunConfig, shared: Arc<Shared>, rx: Receiver<Vec<AnnotationResult>>, annotator_id: String) {
    let mut rng_sub = stream(cfg.seed, STREAM_ANNOTATE + 1);
    let mut rng_reward = stream(cfg.seed, STREAM_REWARD + 1);
    let kind = cfg.reward.kind;
    loop {
        let results = match rx.recv_timeout(POLL) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => {
                if shared.stopped() {
                    return;
                }
                continue;
            }
            Err(RecvTimeoutError::Disconnected) => return,
        };
        let kept = {
            let mut store = shared.store.write();
            store_results(results, cfg.annotator.subsample_rate, &mut rng_sub, &mut store, &annotator_id)
        };
        shared.annotated.fetch_add(kept, Ordering::Relaxed);
        let mut guard = shared.reward_learner.lock();
        if let Some(rl) = guard.as_mut() {
            let store = shared.store.read();
            if warmup_gate(kind, store_size_for(kind, &store), cfg.warmup) == UpdateMode::Burst {
                for _ in 0..cfg.burst_updates {
                    shared.instr.record_burst();
                    rl.update_from_store(&store, &mut rng_reward);
                }
                *shared.reward_snap.write() = Some(rl.snapshot());
            }
        }
    }
}

/// Waits briefly for a thread; one stuck in a slow request is left detached.
fn join_bounded<T>(h: JoinHandle<T>, wait: Duration) {
    let start = Instant::now();
    while !h.is_finished() && start.elapsed() < wait {
        thread::sleep(Duration::from_millis(5));
    }
    if h.is_finished() {
        let _ = h.join();
    }
}

pub(crate) fn run_threaded(cfg: &RunConfig, backend: Option<Arc<dyn Annotator>>) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let kind = cfg.reward.kind;
    let (net, reward_learner) = init_models(cfg)?;
    let mut learner = PpoLearner::new(net, cfg.ppo.clone());
    let shared = Arc::new(Shared {
        stop: AtomicBool::new(false),
        policy: RwLock::new(PolicySnapshot::new(learner.net.clone(), learner.version())),
        store: RwLock::new(AnnotationStore::new()),
        reward_snap: RwLock::new(reward_learner.as_ref().map(|r| r.snapshot())),
        reward_learner: Mutex::new(reward_learner),
        queue: SharedQueue::new(CandidateQueue::new(cfg.annotator.queue_capacity, true)),
        pairs: Mutex::new((PairPool::new(cfg.annotator.pair_dedup), CaptionInterner::new())),
        produced_steps: AtomicU64::new(0),
        instr: WarmupInstrumentation::new(),
        annotated: AtomicU64::new(0),
        requests: AtomicU64::new(0),
        parse_drops: AtomicU64::new(0),
        transport_drops: AtomicU64::new(0),
        last_batch_failed: AtomicBool::new(false),
        inflight_since: Mutex::new(None),
    });

    let workers = cfg.rollout_workers.min(cfg.ppo.num_envs);
    let mut per_worker: Vec<Vec<EnvSlot>> = (0..workers).map(|_| Vec::new()).collect();
    for slot in build_slots(cfg) {
        per_worker[slot.index % workers].push(slot);
    }
    let (batch_tx, batch_rx) = bounded::<RolloutBatch>(cfg.ppo.num_envs);
    let mut handles = Vec::new();
    for (id, slots) in per_worker.into_iter().enumerate() {
        let (c, s, tx) = (cfg.clone(), shared.clone(), batch_tx.clone());
        handles.push(thread::Builder::new().name(format!("rollout-{id}")).spawn(move || rollout_worker(id, slots, c, s, tx))?);
    }
    drop(batch_tx);
    let mut side_handles = Vec::new();
    if let Some(backend) = backend.clone() {
        let (res_tx, res_rx) = bounded::<Vec<AnnotationResult>>(16);
        let id = backend_id(&backend);
        let (c, s) = (cfg.clone(), shared.clone());
        side_handles.push(thread::Builder::new().name("annotator".into()).spawn(move || annotation_worker(c, s, backend, res_tx))?);
        let (c, s) = (cfg.clone(), shared.clone());
        side_handles.push(thread::Builder::new().name("feedback".into()).spawn(move || feedback_thread(c, s, res_rx, id))?);
    }

    let mut rng_learn = stream(cfg.seed, STREAM_LEARN);
    let mut rng_reward = stream(cfg.seed, STREAM_REWARD);
    let mut synth = RewardSynth::new(cfg.intrinsic(), cfg.annotator.goal);
    let mut staleness = StalenessTracker::new(cfg.ppo.max_staleness);
    let mut window = EpisodeWindow::new(cfg.metrics_window);
    let mut log = EpisodeLog::default();
    let mut writer = MetricsWriter::create(&cfg.out.join("metrics.csv"), false)?;
    let mut steps: u64 = 0;
    let mut next_ckpt = if cfg.checkpoint_every > 0 { cfg.checkpoint_every } else { u64::MAX };
    let mut skipped_updates = 0;
    let mut buf = PpoBuffer::new(FEATURE_DIM);
    let mut intrinsic_sum = 0.0;
    let mut iter_steps = 0u64;
    let mut pending: Vec<String> = Vec::new();
    let mut result: Result<(), RunError> = Ok(());

    while steps < cfg.steps {
        if cfg.max_seconds.is_some_and(|s| start.elapsed().as_secs_f64() >= s) {
            break;
        }
        let b = match batch_rx.recv_timeout(Duration::from_millis(100)) {
            Ok(b) => b,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => break,
        };
        steps += b.len() as u64;
        if !staleness.check(b.version, learner.version()) {
            continue;
        }
        let reward_snap = shared.reward_snap.read().clone();
        let syn = {
            let store = shared.store.read();
            synth.synthesize(&b, &store, reward_snap.as_ref(), &mut |c: &str| pending.push(c.to_string()))
        };
        if !pending.is_empty() {
            if kind == RewardKind::Ranking {
                let mut guard = shared.pairs.lock();
                let (pool, interner) = &mut *guard;
                for c in pending.drain(..) {
                    pool.push(interner.intern(&c));
                }
            } else {
                for c in pending.drain(..) {
                    shared.queue.enqueue(c);
                }
            }
        }
        intrinsic_sum += syn.intrinsic_sum;
        iter_steps += b.len() as u64;
        push_rollout(&mut buf, &b, &syn.rewards, &cfg.ppo);
        for e in b.episodes {
            window.push(e.clone());
            log.push(steps, e);
        }
        if buf.len() < cfg.ppo.batch {
            continue;
        }

        {
            let mut guard = shared.reward_learner.lock();
            if let Some(rl) = guard.as_mut() {
                let store = shared.store.read();
                let size = store_size_for(kind, &store);
                if warmup_gate(kind, size, cfg.warmup) == UpdateMode::Continuous {
                    for _ in 0..cfg.continuous_updates {
                        shared.instr.record_continuous(size, cfg.warmup);
                        rl.update_from_store(&store, &mut rng_reward);
                    }
                    *shared.reward_snap.write() = Some(rl.snapshot());
                }
            }
        }
        let stats = learner.update(&mut buf, &mut rng_learn);
        skipped_updates += stats.skipped;
        *shared.policy.write() = PolicySnapshot::new(learner.net.clone(), learner.version());
        buf = PpoBuffer::new(FEATURE_DIM);

        let wall = start.elapsed().as_secs_f64();
        let m = window.means();
        let qc = shared.queue.counters();
        let row = MetricsRow {
            step: steps,
            wall_s: None,
            steps_per_sec: None,
            episodes: m.episodes,
            mean_return: m.mean_return,
            success_rate: m.success_rate,
            mean_intrinsic: intrinsic_sum / iter_steps.max(1) as f64,
            store_size: shared.store.read().len(),
            queue_depth: if kind == RewardKind::Ranking { shared.pairs.lock().0.len() } else { shared.queue.len() },
            annotated: shared.annotated.load(Ordering::Relaxed),
            annotation_requests: shared.requests.load(Ordering::Relaxed),
            parse_drops: shared.parse_drops.load(Ordering::Relaxed),
            transport_drops: shared.transport_drops.load(Ordering::Relaxed),
            queue_evicted: qc.evicted,
            policy_version: learner.version(),
            reward_version: shared.reward_snap.read().as_ref().map_or(0, |r| r.version),
            staleness_hist: staleness.histogram_field(),
            discarded_batches: staleness.discarded(),
            burst_updates: shared.instr.burst(),
            continuous_updates: shared.instr.continuous(),
            mean_xl: m.xl,
            mean_dlvl: m.dlvl,
            mean_gold: m.gold,
            mean_scout: m.scout,
            mean_kills: m.kills,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            skipped_updates,
            annotator_stalled: u8::from(shared.stalled()),
        };
        intrinsic_sum = 0.0;
        iter_steps = 0;
        if let Err(e) = writer.write(&row, wall, steps as f64 / wall.max(1e-9)) {
            result = Err(e.into());
            break;
        }
        if steps >= next_ckpt {
            let path = cfg.out.join("checkpoints").join(format!("step_{steps}.ckpt"));
            let rl = shared.reward_learner.lock();
            if let Err(e) = write_checkpoint(&path, cfg.seed, steps, &learner.net, rl.as_ref().map(|r| r.model())) {
                result = Err(e);
                break;
            }
            next_ckpt += cfg.checkpoint_every;
        }
    }

    let wall = start.elapsed().as_secs_f64();
    let stalled = shared.stalled();
    shared.stop.store(true, Ordering::Relaxed);
    drop(batch_rx);
    for h in handles {
        join_bounded(h, Duration::from_secs(5));
    }
    for h in side_handles {
        join_bounded(h, Duration::from_secs(2));
    }
    result?;

    let reward_model = shared.reward_learner.lock().as_ref().map(|r| r.model().clone());
    write_checkpoint(&cfg.out.join("checkpoints").join("final.ckpt"), cfg.seed, steps, &learner.net, reward_model.as_ref())?;
    let store = shared.store.read();
    if backend.is_some() {
        store.save(&cfg.out.join("store.jsonl"))?;
    }
    let annotated = shared.annotated.load(Ordering::Relaxed);
    let reward_version = shared.reward_snap.read().as_ref().map_or(0, |r| r.version);
    let max_stale = staleness.histogram().iter().rposition(|&c| c > 0).unwrap_or(0) as u64;
    Ok(RunSummary {
        steps,
        episodes: window.total(),
        wall_seconds: wall,
        steps_per_sec: steps as f64 / wall.max(1e-9),
        final_window: log.final_window(steps),
        store_size: store.len(),
        annotated,
        annotation_requests: shared.requests.load(Ordering::Relaxed),
        fraction_annotated: annotated as f64 / steps.max(1) as f64,
        parse_drops: shared.parse_drops.load(Ordering::Relaxed),
        transport_drops: shared.transport_drops.load(Ordering::Relaxed),
        queue_evicted: shared.queue.counters().evicted,
        policy_version: learner.version(),
        reward_version,
        discarded_batches: staleness.discarded(),
        max_staleness_seen: max_stale,
        burst_updates: shared.instr.burst(),
        continuous_updates: shared.instr.continuous(),
        continuous_below_warmup: shared.instr.continuous_below_warmup(),
        skipped_updates,
        annotator_stalled: stalled,
    })
}

fn backend_id(b: &Arc<dyn Annotator>) -> String {
    b.id().to_string()
}
