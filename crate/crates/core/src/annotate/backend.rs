//! Annotator backends: a deterministic rule-table mock and a chat-completions
//! HTTP client.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use caverns::{classify, Template};
use serde_json::json;
use thiserror::Error;

use super::parse::{binary_completion, ranking_completion, Preference};
use super::prompts::{detect_goal, extract_binary_caption, extract_ranking_captions, GoalVariant, Prompt};

pub const API_KEY_ENV: &str = "LANTERN_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request failed: {0}")]
    Request(String),
    #[error("server returned status {0}")]
    Status(u16),
    #[error("response body has no choices[0].message.content")]
    MissingContent,
    #[error("cancelled")]
    Cancelled,
}

pub trait Annotator: Send + Sync {
    fn id(&self) -> &str;

    /// Sends one request per prompt. `cancel` asks long waits to give up.
    fn complete_batch(&self, prompts: &[Prompt], cancel: &AtomicBool) -> Vec<Result<String, TransportError>>;
}

// ── Mock ──

/// Caption categories used by the rule table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CaptionTraits {
    pub kill: bool,
    pub level_up: bool,
    pub gold: bool,
    pub hidden_passage: bool,
    pub descend: bool,
}

pub fn caption_traits(caption: &str) -> CaptionTraits {
    let mut t = CaptionTraits::default();
    for seg in classify(caption).unwrap_or_default() {
        match seg {
            Template::Kill => t.kill = true,
            Template::LevelUp => t.level_up = true,
            Template::GoldPickup | Template::GoldHere | Template::CountingMoney => t.gold = true,
            Template::HiddenPassage => t.hidden_passage = true,
            Template::Descend => t.descend = true,
            _ => {}
        }
    }
    t
}

/// The mock annotator's rule table.
///
/// | goal    | label 1 when the caption has                           |
/// |---------|--------------------------------------------------------|
/// | default | a kill, level-up, gold, hidden-passage or descend      |
/// | combat  | a kill or level-up, and no gold and no descend         |
/// | gold    | gold, and no kill, level-up or descend                 |
///
/// Gold covers picking up gold, standing on gold and hearing someone
/// counting money. Captions outside the grammar are labelled 0.
pub fn mock_label(caption: &str, goal: GoalVariant) -> u8 {
    let t = caption_traits(caption);
    let hit = match goal {
        GoalVariant::Default => t.kill || t.level_up || t.gold || t.hidden_passage || t.descend,
        GoalVariant::Combat => (t.kill || t.level_up) && !t.gold && !t.descend,
        GoalVariant::Gold => t.gold && !t.kill && !t.level_up && !t.descend,
    };
    u8::from(hit)
}

pub fn mock_preference(caption1: &str, caption2: &str, goal: GoalVariant) -> Preference {
    match mock_label(caption1, goal).cmp(&mock_label(caption2, goal)) {
        std::cmp::Ordering::Greater => Preference::First,
        std::cmp::Ordering::Less => Preference::Second,
        std::cmp::Ordering::Equal => Preference::None,
    }
}

/// Answers prompts by reading the caption(s) and goal back out of the prompt
/// text and applying [`mock_label`]. Prompts it cannot read get a completion
/// without any label, which the parser rejects.
#[derive(Debug, Default)]
pub struct MockAnnotator {
    /// Delay per batch, modelling a slow server.
    pub latency: Duration,
    requests: AtomicU64,
}

impl MockAnnotator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_latency(latency: Duration) -> Self {
        Self { latency, requests: AtomicU64::new(0) }
    }

    /// A backend that never answers until cancelled.
    pub fn stalled() -> Self {
        Self::with_latency(Duration::MAX)
    }

    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn answer(user: &str) -> String {
        let goal = detect_goal(user);
        if let Some((a, b)) = extract_ranking_captions(user) {
            return ranking_completion(mock_preference(a, b, goal));
        }
        if let Some(c) = extract_binary_caption(user) {
            return binary_completion(mock_label(c, goal));
        }
        "I cannot parse this request.".to_string()
    }
}

fn sleep_cancellable(d: Duration, cancel: &AtomicBool) -> bool {
    let start = Instant::now();
    while start.elapsed() < d {
        if cancel.load(Ordering::Relaxed) {
            return false;
        }
        let left = d.saturating_sub(start.elapsed());
        std::thread::sleep(left.min(Duration::from_millis(5)));
    }
    true
}

impl Annotator for MockAnnotator {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete_batch(&self, prompts: &[Prompt], cancel: &AtomicBool) -> Vec<Result<String, TransportError>> {
        if !self.latency.is_zero() && !prompts.is_empty() && !sleep_cancellable(self.latency, cancel) {
            return prompts.iter().map(|_| Err(TransportError::Cancelled)).collect();
        }
        self.requests.fetch_add(prompts.len() as u64, Ordering::Relaxed);
        prompts.iter().map(|p| Ok(Self::answer(&p.user))).collect()
    }
}

// ── HTTP ──

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "llama-3.1-8b-instruct".into(),
            temperature: 0.1,
            max_tokens: 4096,
            timeout: Duration::from_secs(120),
        }
    }
}

pub struct HttpAnnotator {
    cfg: HttpConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl HttpAnnotator {
    pub fn new(cfg: HttpConfig) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| TransportError::Request(e.to_string()))?;
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Ok(Self { cfg, client, api_key })
    }

    pub fn request_body(&self, p: &Prompt) -> serde_json::Value {
        json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": p.system},
                {"role": "user", "content": p.user},
            ],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        })
    }

    fn send(&self, p: &Prompt) -> Result<String, TransportError> {
        let mut req = self.client.post(&self.cfg.url).json(&self.request_body(p));
        if let Some(k) = &self.api_key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| TransportError::Request(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(TransportError::Status(status.as_u16()));
        }
        let v: serde_json::Value = resp.json().map_err(|e| TransportError::Request(e.to_string()))?;
        v["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or(TransportError::MissingContent)
    }
}

impl Annotator for HttpAnnotator {
    fn id(&self) -> &str {
        "http"
    }

    fn complete_batch(&self, prompts: &[Prompt], cancel: &AtomicBool) -> Vec<Result<String, TransportError>> {
        prompts
            .iter()
            .map(|p| if cancel.load(Ordering::Relaxed) { Err(TransportError::Cancelled) } else { self.send(p) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::parse::parse_binary_response;
    use crate::annotate::prompts::build_binary_prompt;

    #[test]
    fn rule_table_examples() {
        assert_eq!(mock_label("You kill the goblin!", GoalVariant::Default), 1);
        assert_eq!(mock_label("That door is closed.", GoalVariant::Default), 0);
        assert_eq!(mock_label("5 gold pieces.", GoalVariant::Combat), 0);
        assert_eq!(mock_label("5 gold pieces.", GoalVariant::Gold), 1);
        assert_eq!(mock_label("You kill the newt!", GoalVariant::Gold), 0);
        assert_eq!(mock_label("You kill the newt!  Welcome to experience level 2.", GoalVariant::Combat), 1);
        assert_eq!(mock_label("You hear someone counting money.", GoalVariant::Default), 1);
        assert_eq!(mock_label("You find a hidden passage.", GoalVariant::Default), 1);
        assert_eq!(mock_label("You climb down to dungeon level 2.", GoalVariant::Default), 1);
        assert_eq!(mock_label("You climb down to dungeon level 2.", GoalVariant::Combat), 0);
        assert_eq!(mock_label("", GoalVariant::Default), 0);
    }

    #[test]
    fn mock_reads_prompts() {
        let m = MockAnnotator::new();
        let cancel = AtomicBool::new(false);
        let prompts: Vec<Prompt> = ["5 gold pieces.", "You kill the newt!"]
            .iter()
            .map(|c| build_binary_prompt(c, GoalVariant::Combat))
            .collect();
        let out = m.complete_batch(&prompts, &cancel);
        let labels: Vec<u8> = out.into_iter().map(|r| parse_binary_response(&r.unwrap()).unwrap()).collect();
        assert_eq!(labels, vec![0, 1]);
        assert_eq!(m.requests(), 2);
    }

    #[test]
    fn stalled_mock_honours_cancel() {
        let m = MockAnnotator::stalled();
        let cancel = AtomicBool::new(true);
        let out = m.complete_batch(&[build_binary_prompt("x", GoalVariant::Default)], &cancel);
        assert_eq!(out, vec![Err(TransportError::Cancelled)]);
    }
}
