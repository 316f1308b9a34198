//! Paired throughput runs: annotation off versus on, same seed and duration.

use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;

use super::config::{ExecMode, RunConfig};
use super::pipeline::make_backend;
use super::metrics::RunSummary;
use super::run::{run_training_with, RunError};
use crate::annotate::Annotator;
use crate::rewards::RewardKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport {
    /// Env steps per second with no annotator and no reward model.
    pub off_sps: f64,
    /// Env steps per second with the configured reward and annotator.
    pub on_sps: f64,
    /// `on_sps / off_sps`, capped at 1.
    pub retention: f64,
    pub captions_per_sec: f64,
    /// Stored annotations per env step of the annotated run.
    pub fraction_annotated: f64,
    pub annotator_stalled: bool,
}

/// Alternating segments per arm. Host load drifts over a minute; interleaving
/// the arms spreads that drift over both instead of biasing one.
pub const THROUGHPUT_ROUNDS: u32 = 4;

/// Runs `cfg` in threaded mode for `duration` per arm, split into alternating
/// segments: one arm with the reward kind forced to `none`, one as configured.
pub fn measure_throughput(cfg: &RunConfig, duration: Duration) -> Result<ThroughputReport, RunError> {
    let backend = if cfg.reward.kind.uses_annotator() { Some(make_backend(&cfg.annotator).map_err(RunError::Backend)?) } else { None };
    measure_throughput_with(cfg, duration, backend)
}

#[derive(Default)]
struct Arm {
    steps: u64,
    seconds: f64,
    annotated: u64,
    stalled: bool,
}

impl Arm {
    fn add(&mut self, s: &RunSummary) {
        self.steps += s.steps;
        self.seconds += s.wall_seconds;
        self.annotated += s.annotated;
        self.stalled |= s.annotator_stalled;
    }

    fn sps(&self) -> f64 {
        if self.seconds > 0.0 {
            self.steps as f64 / self.seconds
        } else {
            0.0
        }
    }
}

pub fn measure_throughput_with(
    cfg: &RunConfig,
    duration: Duration,
    backend: Option<Arc<dyn Annotator>>,
) -> Result<ThroughputReport, RunError> {
    let mut base = cfg.clone();
    base.mode = ExecMode::Threaded;
    base.steps = u64::MAX / 2;
    base.max_seconds = Some(duration.as_secs_f64() / THROUGHPUT_ROUNDS as f64);
    base.checkpoint_every = 0;

    let (mut off_arm, mut on_arm) = (Arm::default(), Arm::default());
    for round in 0..THROUGHPUT_ROUNDS {
        let mut off = base.clone();
        off.seed = cfg.seed.wrapping_add(round as u64);
        off.reward.kind = RewardKind::None;
        off.out = cfg.out.join("throughput_off").join(format!("round{round}"));
        off_arm.add(&run_training_with(&off, None)?.summary);

        let mut on = base.clone();
        on.seed = off.seed;
        on.out = cfg.out.join("throughput_on").join(format!("round{round}"));
        on_arm.add(&run_training_with(&on, backend.clone())?.summary);
    }

    let (off_sps, on_sps) = (off_arm.sps(), on_arm.sps());
    let retention = if off_sps > 0.0 { (on_sps / off_sps).min(1.0) } else { 0.0 };
    Ok(ThroughputReport {
        off_sps,
        on_sps,
        retention,
        captions_per_sec: on_arm.annotated as f64 / on_arm.seconds.max(1e-9),
        fraction_annotated: on_arm.annotated as f64 / on_arm.steps.max(1) as f64,
        annotator_stalled: on_arm.stalled,
    })
}
