//! Wires environments, the learner and the annotation subsystem into a
//! training run, plus throughput measurement, plotting and offline annotation.

pub mod config;
pub mod metrics;
pub mod offline;
pub mod pipeline;
pub mod plots;
pub mod run;
pub mod synth;
mod threaded;
pub mod throughput;
pub mod warmup;

pub use config::{AnnotatorConfig, Backend, ExecMode, RunConfig, CONFIG_KEYS};
pub use metrics::{EpisodeMeans, MetricsRow, RunSummary, METRICS_SCHEMA};
pub use offline::{annotate_offline, OfflineReport};
pub use plots::{emit_plots, PlotError, PlotReport};
pub use run::{read_checkpoint, run_training, run_training_with, write_checkpoint, RunError, RunOutcome};
pub use synth::RewardSynth;
pub use throughput::{measure_throughput, measure_throughput_with, ThroughputReport};
pub use warmup::{warmup_gate, UpdateMode, WarmupInstrumentation};
