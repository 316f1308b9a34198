//! Bounded LIFO candidate queue with optional deduplication.

use std::collections::{HashSet, VecDeque};
use std::hash::Hash;
use std::time::Duration;

use parking_lot::{Condvar, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueueCounters {
    pub accepted: u64,
    pub rejected_duplicate: u64,
    pub evicted: u64,
    pub popped: u64,
}

#[derive(Debug, Clone)]
pub struct CandidateQueue<T: Eq + Hash + Clone> {
    /// Front is the oldest entry, back the newest.
    items: VecDeque<T>,
    capacity: usize,
    dedup: bool,
    /// Items currently enqueued or already handed out. Evicted items leave.
    known: HashSet<T>,
    counters: QueueCounters,
}

impl<T: Eq + Hash + Clone> CandidateQueue<T> {
    pub fn new(capacity: usize, dedup: bool) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self { items: VecDeque::new(), capacity, dedup, known: HashSet::new(), counters: QueueCounters::default() }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn counters(&self) -> QueueCounters {
        self.counters
    }

    /// Marks an item as already handled (for example, loaded from a store) so
    /// it is never enqueued.
    pub fn mark_known(&mut self, item: T) {
        if self.dedup {
            self.known.insert(item);
        }
    }

    pub fn is_known(&self, item: &T) -> bool {
        self.known.contains(item)
    }

    pub fn enqueue(&mut self, item: T) -> bool {
        if self.dedup {
            if self.known.contains(&item) {
                self.counters.rejected_duplicate += 1;
                return false;
            }
            self.known.insert(item.clone());
        }
        if self.items.len() == self.capacity {
            let old = self.items.pop_front().expect("full queue is non-empty");
            if self.dedup {
                self.known.remove(&old);
            }
            self.counters.evicted += 1;
        }
        self.items.push_back(item);
        self.counters.accepted += 1;
        true
    }

    pub fn pop(&mut self) -> Option<T> {
        let it = self.items.pop_back();
        if it.is_some() {
            self.counters.popped += 1;
        }
        it
    }

    /// Pops up to `n` newest items, newest first.
    pub fn pop_batch(&mut self, n: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(n.min(self.items.len()));
        while out.len() < n {
            match self.pop() {
                Some(it) => out.push(it),
                None => break,
            }
        }
        out
    }

    /// Puts previously popped items back on top so they are served next.
    /// Items evicted meanwhile by capacity are not resurrected twice.
    pub fn requeue(&mut self, items: Vec<T>) {
        for it in items.into_iter().rev() {
            if self.items.len() == self.capacity {
                let old = self.items.pop_front().expect("full queue is non-empty");
                if self.dedup {
                    self.known.remove(&old);
                }
                self.counters.evicted += 1;
            }
            self.items.push_back(it);
        }
    }
}

/// A candidate queue shared between the producer (learner) and the
/// annotation worker. All waits are bounded.
pub struct SharedQueue<T: Eq + Hash + Clone> {
    inner: Mutex<CandidateQueue<T>>,
    ready: Condvar,
}

impl<T: Eq + Hash + Clone> SharedQueue<T> {
    pub fn new(q: CandidateQueue<T>) -> Self {
        Self { inner: Mutex::new(q), ready: Condvar::new() }
    }

    pub fn enqueue(&self, item: T) -> bool {
        let ok = self.inner.lock().enqueue(item);
        if ok {
            self.ready.notify_one();
        }
        ok
    }

    pub fn with<R>(&self, f: impl FnOnce(&mut CandidateQueue<T>) -> R) -> R {
        f(&mut self.inner.lock())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Waits up to `timeout` for at least one item, then pops up to `n`.
    pub fn pop_batch_timeout(&self, n: usize, timeout: Duration) -> Vec<T> {
        let mut q = self.inner.lock();
        if q.is_empty() {
            self.ready.wait_for(&mut q, timeout);
        }
        q.pop_batch(n)
    }

    pub fn requeue(&self, items: Vec<T>) {
        self.inner.lock().requeue(items);
        self.ready.notify_one();
    }

    pub fn counters(&self) -> QueueCounters {
        self.inner.lock().counters()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_rejects_second_enqueue() {
        let mut q = CandidateQueue::new(10, true);
        assert!(q.enqueue("You kill the goblin!".to_string()));
        assert!(!q.enqueue("You kill the goblin!".to_string()));
        q.pop();
        // Handed-out captions are never enqueued again.
        assert!(!q.enqueue("You kill the goblin!".to_string()));
    }

    #[test]
    fn full_queue_evicts_oldest() {
        let mut q = CandidateQueue::new(3, true);
        for c in ["a", "b", "c", "d"] {
            q.enqueue(c.to_string());
        }
        assert_eq!(q.len(), 3);
        assert_eq!(q.counters().evicted, 1);
        assert_eq!(q.pop_batch(5), vec!["d", "c", "b"]);
        // The evicted caption may come back.
        assert!(q.enqueue("a".to_string()));
    }

    #[test]
    fn lifo_order() {
        let mut q = CandidateQueue::new(8, false);
        q.enqueue("A");
        q.enqueue("B");
        assert_eq!(q.pop(), Some("B"));
        assert_eq!(q.pop(), Some("A"));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn requeue_restores_top() {
        let mut q = CandidateQueue::new(8, true);
        for c in ["a", "b", "c"] {
            q.enqueue(c);
        }
        let batch = q.pop_batch(2);
        q.enqueue("d");
        q.requeue(batch);
        assert_eq!(q.pop_batch(4), vec!["c", "b", "d", "a"]);
    }
}
