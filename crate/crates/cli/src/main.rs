//! `lantern`: train agents with online annotated intrinsic rewards, measure
//! throughput, annotate caption dumps offline and plot learning curves.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lantern::orchestrator::pipeline::make_backend;
use lantern::orchestrator::plots::group_inputs;
use lantern::orchestrator::{annotate_offline, emit_plots, measure_throughput, run_training, RunConfig, RunError};
use lantern::rewards::ConfigError;

#[derive(Parser, Debug)]
#[command(name = "lantern", version, about = "Online intrinsic-reward learning from annotated captions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one training job.
    Train(RunArgs),
    /// Paired runs with annotation off and on; reports throughput retention.
    MeasureThroughput {
        #[command(flatten)]
        run: RunArgs,
        /// Seconds per run.
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
    },
    /// Annotate a caption dump (JSONL with a "caption" field, or one caption
    /// per line) and write a store file.
    AnnotateOffline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Learning curves (mean ± standard error over seeds) and a summary table.
    Plot {
        /// Metrics files, as `label=path` to group seeds under one curve.
        #[arg(required = true)]
        files: Vec<String>,
        #[arg(long, default_value = "success_rate")]
        metric: String,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Config file of `key = value` lines, applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    reward: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    /// Annotator backend: mock or http.
    #[arg(long)]
    annotator: Option<String>,
    #[arg(long)]
    url: Option<String>,
    #[arg(long)]
    subsample: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(format!("config error: {e}"))
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => c.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl RunArgs {
    fn build(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("task", &self.task),
            ("reward.kind", &self.reward),
            ("reward.beta", &self.beta),
            ("reward.eta", &self.eta),
            ("reward.z", &self.z),
            ("reward.nu", &self.nu),
            ("annotator.backend", &self.annotator),
            ("annotator.url", &self.url),
            ("annotator.subsample_rate", &self.subsample),
            ("seed", &self.seed),
            ("steps", &self.steps),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::new("--set", format!("expected KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Train(args) => {
            let cfg = args.build()?;
            let out = run_training(&cfg)?;
            let s = &out.summary;
            println!(
                "steps {} episodes {} final success {:.3} return {:.3} annotated {} ({:.0} steps/s)",
                s.steps, s.episodes, s.final_window.success_rate, s.final_window.mean_return, s.annotated, s.steps_per_sec
            );
            println!("metrics: {}", out.metrics_path().display());
        }
        Command::MeasureThroughput { run, duration } => {
            let cfg = run.build()?;
            if !(duration > 0.0 && duration.is_finite()) {
                return Err(Failure::Config(format!("config error: duration: must be > 0, got {duration}")));
            }
            let r = measure_throughput(&cfg, Duration::from_secs_f64(duration))?;
            println!("{}", serde_json::to_string_pretty(&r).map_err(|e| Failure::Runtime(e.to_string()))?);
        }
        Command::AnnotateOffline { input, output, run } => {
            let cfg = run.build()?;
            let backend = make_backend(&cfg.annotator).map_err(Failure::Runtime)?;
            let r = annotate_offline(&input, &output, backend.as_ref(), cfg.annotator.goal, cfg.annotator.batch_size)?;
            println!(
                "captions {} annotated {} positive {} parse drops {} transport drops {}",
                r.captions, r.annotated, r.positive, r.parse_drops, r.transport_drops
            );
        }
        Command::Plot { files, metric, out } => {
            let report = emit_plots(&group_inputs(&files), &metric, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} and {}", report.svg.display(), report.table.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
