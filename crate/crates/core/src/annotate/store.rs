//! The annotation store: binary labels keyed by caption, and an append-only
//! list of preference records.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parse::Preference;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub caption: String,
    pub label: u8,
    pub annotator: String,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceRecord {
    pub caption1: String,
    pub caption2: String,
    pub label: Preference,
    pub seq: u64,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

#[derive(Serialize, Deserialize)]
struct BinaryLine<'a> {
    caption: std::borrow::Cow<'a, str>,
    label: u8,
    seq: u64,
}

#[derive(Serialize, Deserialize)]
struct PreferenceLine<'a> {
    c1: std::borrow::Cow<'a, str>,
    c2: std::borrow::Cow<'a, str>,
    label: Option<u8>,
    seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    labels: HashMap<String, AnnotationRecord>,
    /// Insertion order of binary records, for uniform sampling.
    order: Vec<String>,
    prefs: Vec<PreferenceRecord>,
    next_seq: u64,
}

impl AnnotationStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of stored annotations of either kind.
    pub fn len(&self) -> usize {
        self.labels.len() + self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn binary_len(&self) -> usize {
        self.labels.len()
    }

    pub fn preference_len(&self) -> usize {
        self.prefs.len()
    }

    /// `None` is a miss; there is no default label.
    pub fn lookup(&self, caption: &str) -> Option<u8> {
        self.labels.get(caption).map(|r| r.label)
    }

    pub fn contains(&self, caption: &str) -> bool {
        self.labels.contains_key(caption)
    }

    /// Inserts a binary label. An already stored caption keeps its label and
    /// the call returns `false`.
    pub fn insert_binary(&mut self, caption: &str, label: u8, annotator: &str) -> bool {
        assert!(label <= 1, "binary label must be 0 or 1");
        if self.labels.contains_key(caption) {
            return false;
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.labels.insert(
            caption.to_string(),
            AnnotationRecord { caption: caption.to_string(), label, annotator: annotator.to_string(), seq },
        );
        self.order.push(caption.to_string());
        true
    }

    pub fn insert_preference(&mut self, caption1: &str, caption2: &str, label: Preference) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.prefs.push(PreferenceRecord { caption1: caption1.into(), caption2: caption2.into(), label, seq });
    }

    pub fn record(&self, caption: &str) -> Option<&AnnotationRecord> {
        self.labels.get(caption)
    }

    /// Binary records in insertion order.
    pub fn binary_records(&self) -> impl Iterator<Item = &AnnotationRecord> {
        self.order.iter().map(move |c| &self.labels[c])
    }

    pub fn binary_at(&self, i: usize) -> &AnnotationRecord {
        &self.labels[&self.order[i]]
    }

    pub fn preferences(&self) -> &[PreferenceRecord] {
        &self.prefs
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let mut w = BufWriter::new(File::create(path)?);
        for r in self.binary_records() {
            let line = BinaryLine { caption: r.caption.as_str().into(), label: r.label, seq: r.seq };
            writeln!(w, "{}", serde_json::to_string(&line).expect("serializable"))?;
        }
        for p in &self.prefs {
            let line = PreferenceLine {
                c1: p.caption1.as_str().into(),
                c2: p.caption2.as_str().into(),
                label: p.label.code(),
                seq: p.seq,
            };
            writeln!(w, "{}", serde_json::to_string(&line).expect("serializable"))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, StoreError> {
        let mut store = AnnotationStore::new();
        let mut max_seq = None::<u64>;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| StoreError::Malformed { line: i + 1, msg: e.to_string() })?;
            let bad = |msg: String| StoreError::Malformed { line: i + 1, msg };
            if v.get("caption").is_some() {
                let rec: BinaryLine = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
                if rec.label > 1 {
                    return Err(bad(format!("label {} is not 0 or 1", rec.label)));
                }
                if !store.labels.contains_key(rec.caption.as_ref()) {
                    let caption = rec.caption.into_owned();
                    store.labels.insert(
                        caption.clone(),
                        AnnotationRecord { caption: caption.clone(), label: rec.label, annotator: "loaded".into(), seq: rec.seq },
                    );
                    store.order.push(caption);
                }
                max_seq = max_seq.max(Some(rec.seq));
            } else {
                let rec: PreferenceLine = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
                let label = Preference::from_code(rec.label).ok_or_else(|| bad(format!("label {:?} is not 1, 2 or null", rec.label)))?;
                store.prefs.push(PreferenceRecord { caption1: rec.c1.into_owned(), caption2: rec.c2.into_owned(), label, seq: rec.seq });
                max_seq = max_seq.max(Some(rec.seq));
            }
        }
        store.next_seq = max_seq.map_or(0, |s| s + 1);
        Ok(store)
    }
}
