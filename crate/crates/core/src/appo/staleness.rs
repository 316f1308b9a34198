//! Policy-staleness bookkeeping.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StalenessDecision {
    Accept(u64),
    Discard(u64),
}

/// Accepts a batch whose version lags the learner by at most `max`.
pub fn enforce_staleness(batch_version: u64, learner_version: u64, max: u64) -> StalenessDecision {
    assert!(batch_version <= learner_version, "batch version {batch_version} is ahead of learner version {learner_version}");
    let s = learner_version - batch_version;
    if s <= max {
        StalenessDecision::Accept(s)
    } else {
        StalenessDecision::Discard(s)
    }
}

/// Histogram of accepted staleness values and a count of discarded batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StalenessTracker {
    max: u64,
    hist: Vec<u64>,
    discarded: u64,
}

impl StalenessTracker {
    pub fn new(max: u64) -> Self {
        Self { max, hist: vec![0; max as usize + 1], discarded: 0 }
    }

    pub fn max(&self) -> u64 {
        self.max
    }

    /// Returns whether the batch may be trained on.
    pub fn check(&mut self, batch_version: u64, learner_version: u64) -> bool {
        match enforce_staleness(batch_version, learner_version, self.max) {
            StalenessDecision::Accept(s) => {
                assert!(s <= self.max, "accepted staleness {s} exceeds {}", self.max);
                self.hist[s as usize] += 1;
                true
            }
            StalenessDecision::Discard(_) => {
                self.discarded += 1;
                false
            }
        }
    }

    pub fn histogram(&self) -> &[u64] {
        &self.hist
    }

    pub fn accepted(&self) -> u64 {
        self.hist.iter().sum()
    }

    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    /// `count@0;count@1;...` for the metrics file.
    pub fn histogram_field(&self) -> String {
        self.hist.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decisions() {
        assert_eq!(enforce_staleness(3, 3, 4), StalenessDecision::Accept(0));
        assert_eq!(enforce_staleness(1, 5, 4), StalenessDecision::Accept(4));
        assert_eq!(enforce_staleness(0, 5, 4), StalenessDecision::Discard(5));
    }

    #[test]
    fn tracker_counts() {
        let mut t = StalenessTracker::new(2);
        assert!(t.check(5, 5));
        assert!(t.check(4, 6));
        assert!(!t.check(1, 6));
        assert_eq!(t.histogram(), &[1, 0, 1]);
        assert_eq!(t.discarded(), 1);
        assert_eq!(t.histogram_field(), "1;0;1");
    }
}
