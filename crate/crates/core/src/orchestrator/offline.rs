//! Replays a caption dump through an annotator and writes a store file,
//! without training.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::AtomicBool;

use serde::Serialize;

use super::run::RunError;
use crate::annotate::{annotate_batch, AnnotationItem, AnnotationResult, AnnotationStore, Annotator, GoalVariant};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OfflineReport {
    pub captions: usize,
    pub annotated: usize,
    pub positive: usize,
    pub parse_drops: u64,
    pub transport_drops: u64,
}

/// One caption per line: either a JSON object with a `caption` field (as in
/// `caverns` dumps) or the raw caption text. Duplicates are dropped.
pub fn read_captions(path: &Path) -> Result<Vec<String>, RunError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let caption = match serde_json::from_str::<serde_json::Value>(&line) {
            Ok(v) if v.is_object() => match v.get("caption").and_then(|c| c.as_str()) {
                Some(c) => c.to_string(),
                None => continue,
            },
            _ => line,
        };
        if seen.insert(caption.clone()) {
            out.push(caption);
        }
    }
    Ok(out)
}

pub fn annotate_offline(
    input: &Path,
    output: &Path,
    backend: &dyn Annotator,
    goal: GoalVariant,
    batch_size: usize,
) -> Result<OfflineReport, RunError> {
    let captions = read_captions(input)?;
    let mut store = AnnotationStore::new();
    let mut report = OfflineReport { captions: captions.len(), ..Default::default() };
    let cancel = AtomicBool::new(false);
    for chunk in captions.chunks(batch_size.max(1)) {
        let items: Vec<AnnotationItem> = chunk.iter().cloned().map(AnnotationItem::Caption).collect();
        let mut out = annotate_batch(&items, backend, goal, &cancel);
        if !out.transport_failed.is_empty() {
            let again = annotate_batch(&out.transport_failed, backend, goal, &cancel);
            report.transport_drops += again.transport_failed.len() as u64;
            report.parse_drops += again.parse_drops;
            out.results.extend(again.results);
        }
        report.parse_drops += out.parse_drops;
        for r in out.results {
            if let AnnotationResult::Binary { caption, label } = r {
                if store.insert_binary(&caption, label, backend.id()) {
                    report.annotated += 1;
                    report.positive += usize::from(label == 1);
                }
            }
        }
    }
    store.save(output)?;
    Ok(report)
}
