//! The annotation subsystem: candidate selection, prompts, backends, parsing
//! and the label store.

pub mod backend;
pub mod batch;
pub mod parse;
pub mod prompts;
pub mod queue;
pub mod store;

pub use backend::{mock_label, mock_preference, Annotator, HttpAnnotator, HttpConfig, MockAnnotator, TransportError};
pub use batch::{annotate_batch, subsample, AnnotationItem, AnnotationResult, BatchOutcome, PairPool};
pub use parse::{parse_binary_response, parse_ranking_response, ParseError, Preference};
pub use prompts::{build_binary_prompt, build_ranking_prompt, GoalVariant, Prompt};
pub use queue::{CandidateQueue, QueueCounters, SharedQueue};
pub use store::{AnnotationRecord, AnnotationStore, PreferenceRecord, StoreError};
