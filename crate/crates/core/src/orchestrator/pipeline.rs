//! Pieces of the annotation path shared by the sync and threaded runners.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;

use super::config::{AnnotatorConfig, Backend};
use crate::annotate::{subsample, AnnotationItem, AnnotationResult, AnnotationStore, Annotator, HttpAnnotator, MockAnnotator};

/// Maps caption text to dense ids for the ranking pair pool.
#[derive(Debug, Clone, Default)]
pub struct CaptionInterner {
    ids: HashMap<String, u32>,
    texts: Vec<String>,
}

impl CaptionInterner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, caption: &str) -> u32 {
        if let Some(&id) = self.ids.get(caption) {
            return id;
        }
        let id = self.texts.len() as u32;
        self.texts.push(caption.to_string());
        self.ids.insert(caption.to_string(), id);
        id
    }

    pub fn text(&self, id: u32) -> &str {
        &self.texts[id as usize]
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

/// Items whose request failed at the transport level get one more try.
#[derive(Debug, Clone, Default)]
pub struct RetryList {
    retried: HashSet<AnnotationItem>,
    pending: Vec<AnnotationItem>,
}

impl RetryList {
    pub fn take(&mut self, n: usize) -> Vec<AnnotationItem> {
        let k = n.min(self.pending.len());
        self.pending.drain(..k).collect()
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Queues first-time failures for a retry; returns how many items were
    /// dropped after failing twice.
    pub fn failed(&mut self, items: Vec<AnnotationItem>) -> u64 {
        let mut dropped = 0;
        for it in items {
            if self.retried.insert(it.clone()) {
                self.pending.push(it);
            } else {
                dropped += 1;
            }
        }
        dropped
    }
}

/// Subsamples parsed annotations and inserts the kept ones. Returns the
/// number inserted.
pub fn store_results<R: Rng>(results: Vec<AnnotationResult>, rate: f64, rng: &mut R, store: &mut AnnotationStore, annotator: &str) -> u64 {
    let mut kept = 0;
    for r in subsample(results, rate, rng) {
        match r {
            AnnotationResult::Binary { caption, label } => {
                if store.insert_binary(&caption, label, annotator) {
                    kept += 1;
                }
            }
            AnnotationResult::Pair { caption1, caption2, label } => {
                store.insert_preference(&caption1, &caption2, label);
                kept += 1;
            }
        }
    }
    kept
}

pub fn make_backend(cfg: &AnnotatorConfig) -> Result<Arc<dyn Annotator>, String> {
    match cfg.backend {
        Backend::Mock => Ok(Arc::new(MockAnnotator::with_latency(cfg.latency))),
        Backend::Http => HttpAnnotator::new(cfg.http_config()).map(|a| Arc::new(a) as Arc<dyn Annotator>).map_err(|e| e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interner_is_stable() {
        let mut i = CaptionInterner::new();
        assert_eq!(i.intern(""), 0);
        assert_eq!(i.intern("a"), 1);
        assert_eq!(i.intern(""), 0);
        assert_eq!(i.text(1), "a");
    }

    #[test]
    fn retry_once_then_drop() {
        let mut r = RetryList::default();
        let item = AnnotationItem::Caption("x".into());
        assert_eq!(r.failed(vec![item.clone()]), 0);
        assert_eq!(r.take(10), vec![item.clone()]);
        assert_eq!(r.failed(vec![item]), 1);
        assert!(r.is_empty());
    }
}
