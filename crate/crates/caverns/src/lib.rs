//! A small procedurally generated roguelike with captioned observations.
//!
//! Each episode descends through up to six 21×21 levels of rooms joined by
//! corridors. Doors may be stuck, corridors may hide passages that need
//! searching, and monsters chase the agent. Every step yields a caption built
//! from a fixed message grammar (see [`caption`]).

pub mod caption;
pub mod dump;
pub mod env;
pub mod features;
pub mod level;
pub mod monster;
pub mod task;

pub use caption::{classify, classify_segment, is_well_formed, Template, TEMPLATES};
pub use env::{Action, Caverns, EnvError, EnvParams, Observation, Progress, Stats, StepResult, NUM_ACTIONS};
pub use features::{policy_features, FEATURE_DIM};
pub use level::{DungeonLevel, GenParams, Pos, Tile};
pub use monster::MonsterKind;
pub use task::TaskSpec;
