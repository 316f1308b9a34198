//! Batch annotation, subsampling and ranking-pair selection.

use std::collections::HashSet;
use std::sync::atomic::AtomicBool;

use rand::Rng;

use super::backend::{Annotator, TransportError};
use super::parse::{parse_binary_response, parse_ranking_response, Preference};
use super::prompts::{build_binary_prompt, build_ranking_prompt, GoalVariant, Prompt};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnnotationItem {
    Caption(String),
    Pair(String, String),
}

impl AnnotationItem {
    pub fn prompt(&self, goal: GoalVariant) -> Prompt {
        match self {
            AnnotationItem::Caption(c) => build_binary_prompt(c, goal),
            AnnotationItem::Pair(a, b) => build_ranking_prompt(a, b, goal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationResult {
    Binary { caption: String, label: u8 },
    Pair { caption1: String, caption2: String, label: Preference },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutcome {
    /// Parsed results in completion order.
    pub results: Vec<AnnotationResult>,
    /// Items whose completion failed to parse twice.
    pub parse_drops: u64,
    /// Items whose request failed at the transport level; the caller may
    /// requeue them once.
    pub transport_failed: Vec<AnnotationItem>,
    pub requests: u64,
}

fn parse_item(item: &AnnotationItem, text: &str) -> Option<AnnotationResult> {
    match item {
        AnnotationItem::Caption(c) => {
            parse_binary_response(text).ok().map(|label| AnnotationResult::Binary { caption: c.clone(), label })
        }
        AnnotationItem::Pair(a, b) => parse_ranking_response(text)
            .ok()
            .map(|label| AnnotationResult::Pair { caption1: a.clone(), caption2: b.clone(), label }),
    }
}

/// Sends one request per item. A completion that fails to parse is retried
/// once and then dropped.
pub fn annotate_batch(items: &[AnnotationItem], backend: &dyn Annotator, goal: GoalVariant, cancel: &AtomicBool) -> BatchOutcome {
    let mut out = BatchOutcome::default();
    if items.is_empty() {
        return out;
    }
    let prompts: Vec<Prompt> = items.iter().map(|i| i.prompt(goal)).collect();
    let replies = backend.complete_batch(&prompts, cancel);
    out.requests += items.len() as u64;
    let mut retry: Vec<usize> = Vec::new();
    for (i, reply) in replies.into_iter().enumerate() {
        match reply {
            Ok(text) => match parse_item(&items[i], &text) {
                Some(r) => out.results.push(r),
                None => retry.push(i),
            },
            Err(TransportError::Cancelled) | Err(_) => out.transport_failed.push(items[i].clone()),
        }
    }
    if !retry.is_empty() {
        let prompts: Vec<Prompt> = retry.iter().map(|&i| prompts[i].clone()).collect();
        let replies = backend.complete_batch(&prompts, cancel);
        out.requests += retry.len() as u64;
        for (k, reply) in replies.into_iter().enumerate() {
            let item = &items[retry[k]];
            match reply.ok().and_then(|t| parse_item(item, &t)) {
                Some(r) => out.results.push(r),
                None => out.parse_drops += 1,
            }
        }
    }
    out
}

/// Keeps each record independently with probability `rate`.
pub fn subsample<T, R: Rng>(records: Vec<T>, rate: f64, rng: &mut R) -> Vec<T> {
    assert!(rate > 0.0 && rate <= 1.0, "subsample rate must be in (0, 1]");
    if rate >= 1.0 {
        return records;
    }
    records.into_iter().filter(|_| rng.random_bool(rate)).collect()
}

/// Pool of observed caption ids from which ranking pairs are drawn.
///
/// By default every observation is kept, so frequent captions are drawn
/// proportionally often. With `dedup` each caption enters the pool once.
#[derive(Debug, Clone, Default)]
pub struct PairPool {
    ids: Vec<u32>,
    dedup: bool,
    seen: HashSet<u32>,
}

impl PairPool {
    pub fn new(dedup: bool) -> Self {
        Self { ids: Vec::new(), dedup, seen: HashSet::new() }
    }

    pub fn push(&mut self, id: u32) {
        if self.dedup && !self.seen.insert(id) {
            return;
        }
        self.ids.push(id);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Two entries drawn uniformly and independently.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<(u32, u32)> {
        if self.ids.is_empty() {
            return None;
        }
        let a = self.ids[rng.random_range(0..self.ids.len())];
        let b = self.ids[rng.random_range(0..self.ids.len())];
        Some((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::backend::MockAnnotator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mock_batch_of_100() {
        let items: Vec<AnnotationItem> =
            (0..100).map(|i| AnnotationItem::Caption(format!("{} gold pieces.", i + 1))).collect();
        let cancel = AtomicBool::new(false);
        let out = annotate_batch(&items, &MockAnnotator::new(), GoalVariant::Default, &cancel);
        assert_eq!(out.results.len(), 100);
        assert!(out.results.iter().all(|r| matches!(r, AnnotationResult::Binary { label: 1, .. })));
        let again = annotate_batch(&items, &MockAnnotator::new(), GoalVariant::Default, &cancel);
        assert_eq!(out, again);
    }

    #[test]
    fn empty_batch() {
        let cancel = AtomicBool::new(false);
        let out = annotate_batch(&[], &MockAnnotator::new(), GoalVariant::Default, &cancel);
        assert!(out.results.is_empty());
        assert_eq!(out.requests, 0);
    }

    #[test]
    fn subsample_identity_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(subsample((0..50).collect::<Vec<_>>(), 1.0, &mut rng), (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn pair_pool_dedup() {
        let mut p = PairPool::new(true);
        for id in [1, 1, 1, 2] {
            p.push(id);
        }
        assert_eq!(p.len(), 2);
        let mut q = PairPool::new(false);
        for id in [1, 1, 1, 2] {
            q.push(id);
        }
        assert_eq!(q.len(), 4);
    }
}
