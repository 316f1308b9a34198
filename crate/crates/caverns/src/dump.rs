//! Line-delimited JSON dumps of levels and trajectories for debugging.

use std::io::{self, Write};

use serde_json::json;

use crate::env::{Action, StepResult};
use crate::level::{DungeonLevel, Entity};

pub fn level_record(seed: u64, level: &DungeonLevel) -> serde_json::Value {
    let entities: Vec<serde_json::Value> = level
        .entities
        .iter()
        .map(|(p, e)| match e {
            Entity::Gold(n) => json!({"x": p.x, "y": p.y, "kind": "gold", "amount": n}),
            Entity::Monster(m) => json!({"x": p.x, "y": p.y, "kind": "monster", "monster": m.kind.name(), "hp": m.hp}),
            Entity::Corpse(k) => json!({"x": p.x, "y": p.y, "kind": "corpse", "monster": k.name()}),
        })
        .collect();
    json!({
        "type": "level",
        "seed": seed,
        "index": level.index,
        "width": level.width,
        "height": level.height,
        "rows": level.render(),
        "entry": level.entry,
        "stairs": level.stairs,
        "entities": entities,
    })
}

pub fn write_level<W: Write>(mut w: W, seed: u64, level: &DungeonLevel) -> io::Result<()> {
    writeln!(w, "{}", level_record(seed, level))
}

/// Writes one JSON object per step.
pub struct TrajectoryWriter<W: Write> {
    out: W,
    t: u64,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, t: 0 }
    }

    pub fn record(&mut self, action: Action, r: &StepResult, pos: crate::level::Pos) -> io::Result<()> {
        self.t += 1;
        let rec = json!({
            "type": "step",
            "t": self.t,
            "action": action.index(),
            "x": pos.x,
            "y": pos.y,
            "caption": r.observation.caption,
            "reward": r.reward,
            "done": r.done,
            "stats": r.observation.stats,
            "progress": r.progress,
        });
        writeln!(self.out, "{rec}")
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
