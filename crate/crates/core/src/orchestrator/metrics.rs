//! Metrics rows, the CSV writers and the end-of-run summary.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::appo::EpisodeSummary;

/// First line of every metrics file; bump when columns change.
pub const METRICS_SCHEMA: &str = "# lantern-metrics v1";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsRow {
    pub step: u64,
    /// Blank in deterministic runs; timing goes to `timing.csv` instead.
    pub wall_s: Option<f64>,
    pub steps_per_sec: Option<f64>,
    pub episodes: u64,
    pub mean_return: f64,
    pub success_rate: f64,
    /// Mean per-step episodic-normalized intrinsic reward since the last row.
    pub mean_intrinsic: f64,
    pub store_size: usize,
    pub queue_depth: usize,
    pub annotated: u64,
    pub annotation_requests: u64,
    pub parse_drops: u64,
    pub transport_drops: u64,
    pub queue_evicted: u64,
    pub policy_version: u64,
    pub reward_version: u64,
    /// Accepted batches by staleness, `count@0;count@1;...`.
    pub staleness_hist: String,
    pub discarded_batches: u64,
    pub burst_updates: u64,
    pub continuous_updates: u64,
    pub mean_xl: f64,
    pub mean_dlvl: f64,
    pub mean_gold: f64,
    pub mean_scout: f64,
    pub mean_kills: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub skipped_updates: u64,
    pub annotator_stalled: u8,
}

pub struct MetricsWriter {
    csv: csv::Writer<File>,
    timing: Option<csv::Writer<File>>,
}

fn with_schema_line(path: &Path) -> std::io::Result<File> {
    let mut f = File::create(path)?;
    writeln!(f, "{METRICS_SCHEMA}")?;
    Ok(f)
}

impl MetricsWriter {
    /// `deterministic` moves the wall-clock columns into `timing.csv` next
    /// to the metrics file so the metrics stay byte-reproducible.
    pub fn create(path: &Path, deterministic: bool) -> std::io::Result<Self> {
        let csv = csv::Writer::from_writer(with_schema_line(path)?);
        let timing = if deterministic {
            let tpath = path.with_file_name("timing.csv");
            let mut w = csv::Writer::from_writer(File::create(tpath)?);
            w.write_record(["step", "wall_s", "steps_per_sec"]).map_err(std::io::Error::other)?;
            Some(w)
        } else {
            None
        };
        Ok(Self { csv, timing })
    }

    pub fn write(&mut self, row: &MetricsRow, wall_s: f64, steps_per_sec: f64) -> std::io::Result<()> {
        let mut row = row.clone();
        if let Some(t) = &mut self.timing {
            t.write_record([row.step.to_string(), format!("{wall_s:.3}"), format!("{steps_per_sec:.1}")]).map_err(std::io::Error::other)?;
            t.flush()?;
            row.wall_s = None;
            row.steps_per_sec = None;
        } else {
            row.wall_s = Some((wall_s * 1000.0).round() / 1000.0);
            row.steps_per_sec = Some(steps_per_sec.round());
        }
        self.csv.serialize(&row).map_err(std::io::Error::other)?;
        self.csv.flush()
    }
}

/// Sliding window over the most recent finished episodes.
#[derive(Debug, Clone)]
pub struct EpisodeWindow {
    cap: usize,
    items: VecDeque<EpisodeSummary>,
    total: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EpisodeMeans {
    pub episodes: u64,
    pub mean_return: f64,
    pub success_rate: f64,
    pub xl: f64,
    pub dlvl: f64,
    pub gold: f64,
    pub scout: f64,
    pub kills: f64,
}

pub fn episode_means<'a>(eps: impl IntoIterator<Item = &'a EpisodeSummary>) -> EpisodeMeans {
    let mut m = EpisodeMeans::default();
    for e in eps {
        m.episodes += 1;
        m.mean_return += e.extrinsic_return;
        m.success_rate += f64::from(u8::from(e.success));
        m.xl += f64::from(e.progress.xl);
        m.dlvl += f64::from(e.progress.dlvl);
        m.gold += f64::from(e.progress.gold);
        m.scout += f64::from(e.progress.scout);
        m.kills += f64::from(e.progress.kills);
    }
    if m.episodes > 0 {
        let n = m.episodes as f64;
        m.mean_return /= n;
        m.success_rate /= n;
        m.xl /= n;
        m.dlvl /= n;
        m.gold /= n;
        m.scout /= n;
        m.kills /= n;
    }
    m
}

impl EpisodeWindow {
    pub fn new(cap: usize) -> Self {
        Self { cap: cap.max(1), items: VecDeque::new(), total: 0 }
    }

    pub fn push(&mut self, e: EpisodeSummary) {
        if self.items.len() == self.cap {
            self.items.pop_front();
        }
        self.items.push_back(e);
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn means(&self) -> EpisodeMeans {
        let mut m = episode_means(&self.items);
        m.episodes = self.total;
        m
    }
}

/// Written to `summary.json` at the end of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: u64,
    pub episodes: u64,
    pub wall_seconds: f64,
    pub steps_per_sec: f64,
    /// Means over episodes that finished in the last tenth of the run.
    pub final_window: EpisodeMeans,
    pub store_size: usize,
    pub annotated: u64,
    pub annotation_requests: u64,
    pub fraction_annotated: f64,
    pub parse_drops: u64,
    pub transport_drops: u64,
    pub queue_evicted: u64,
    pub policy_version: u64,
    pub reward_version: u64,
    pub discarded_batches: u64,
    pub max_staleness_seen: u64,
    pub burst_updates: u64,
    pub continuous_updates: u64,
    pub continuous_below_warmup: u64,
    pub skipped_updates: u64,
    pub annotator_stalled: bool,
}

impl RunSummary {
    pub fn final_success(&self) -> f64 {
        self.final_window.success_rate
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self).map_err(std::io::Error::other)?;
        writeln!(w)?;
        w.flush()
    }
}

/// Finished episodes tagged with the env-step count at which they were consumed.
#[derive(Debug, Clone, Default)]
pub struct EpisodeLog {
    items: Vec<(u64, EpisodeSummary)>,
}

impl EpisodeLog {
    pub fn push(&mut self, step: u64, e: EpisodeSummary) {
        self.items.push((step, e));
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Means over episodes finished after `0.9 * total_steps`.
    pub fn final_window(&self, total_steps: u64) -> EpisodeMeans {
        let cut = total_steps - total_steps / 10;
        episode_means(self.items.iter().filter(|(s, _)| *s >= cut).map(|(_, e)| e))
    }
}
