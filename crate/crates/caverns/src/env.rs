//! The environment: one agent descending through a stack of generated levels.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::caption::SEGMENT_SEPARATOR;
use crate::level::{DungeonLevel, Entity, GenParams, Pos, Tile};
use crate::monster::{Monster, MonsterKind};
use crate::task::TaskSpec;

/// Move offsets in action order: N, NE, E, SE, S, SW, W, NW.
pub const DIRS: [(i32, i32); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

pub const NUM_ACTIONS: usize = 12;
pub const VIEW_RADIUS: i32 = 20;
pub const VIEW_SIDE: usize = (2 * VIEW_RADIUS + 1) as usize;

pub mod code {
    pub const UNKNOWN: u8 = 0;
    pub const WALL: u8 = 1;
    pub const FLOOR: u8 = 2;
    pub const CORRIDOR: u8 = 3;
    pub const CLOSED_DOOR: u8 = 4;
    pub const OPEN_DOOR: u8 = 5;
    pub const STAIRS: u8 = 6;
    pub const GOLD: u8 = 7;
    pub const MONSTER: u8 = 8;
    pub const AGENT: u8 = 9;
}

const MAX_SEGMENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Action {
    Move(u8),
    Search,
    Descend,
    Attack,
    Pickup,
}

impl Action {
    pub fn from_index(i: usize) -> Action {
        match i {
            0..=7 => Action::Move(i as u8),
            8 => Action::Search,
            9 => Action::Descend,
            10 => Action::Attack,
            11 => Action::Pickup,
            _ => panic!("action index {i} out of range"),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Action::Move(d) => d as usize,
            Action::Search => 8,
            Action::Descend => 9,
            Action::Attack => 10,
            Action::Pickup => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Stats {
    pub hp: u32,
    pub max_hp: u32,
    pub xl: u32,
    pub dlvl: u32,
    pub gold: u32,
    pub steps: u32,
    pub score: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `VIEW_SIDE * VIEW_SIDE` cell codes, row-major, agent at the centre.
    pub view: Vec<u8>,
    /// Code of the cell under the agent, which the view overwrites.
    pub here: u8,
    pub stats: Stats,
    pub caption: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Progress {
    pub xl: u32,
    pub dlvl: u32,
    pub gold: u32,
    pub scout: u32,
    pub kills: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// The task's sparse goal was reached this step.
    pub success: bool,
    pub progress: Progress,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("step called on a finished episode; call reset first")]
    EpisodeOver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvParams {
    pub gen: GenParams,
    pub max_steps: u32,
    /// Chance that one search reveals a given adjacent hidden passage.
    pub search_prob: f64,
    pub start_hp: u32,
    pub hp_per_level: u32,
    pub regen_interval: u32,
    /// Monsters within this Chebyshev distance chase even when unseen.
    pub chase_radius: i32,
    pub wander_prob: f64,
    pub respawn_prob: f64,
    pub ambient_prob: f64,
    pub draft_prob: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            gen: GenParams::default(),
            max_steps: 2000,
            search_prob: 0.2,
            start_hp: 14,
            hp_per_level: 5,
            regen_interval: 10,
            chase_radius: 2,
            wander_prob: 0.3,
            respawn_prob: 1.0 / 150.0,
            ambient_prob: 0.01,
            draft_prob: 0.1,
        }
    }
}

pub fn xp_threshold(level: u32) -> u32 {
    // Experience needed to reach `level`: 20, 40, 80, ...
    20u32.saturating_mul(1 << (level.saturating_sub(2)).min(20))
}

#[derive(Debug, Clone)]
pub struct Caverns {
    params: EnvParams,
    task: TaskSpec,
    seed: u64,
    rng: ChaCha8Rng,
    level: DungeonLevel,
    /// Remembered cells of the current level.
    seen: Vec<bool>,
    agent: Pos,
    hp: i32,
    max_hp: i32,
    xl: u32,
    xp: u32,
    gold: u32,
    steps: u32,
    score: u32,
    kills: u32,
    attacks: u32,
    wounded: bool,
    weak: bool,
    visited: HashSet<(u32, i32, i32)>,
    done: bool,
    task_paid: bool,
}

impl Caverns {
    pub fn new(params: EnvParams) -> Self {
        let level = DungeonLevel::generate(0, 1, &params.gen);
        let mut env = Self {
            seen: vec![false; level.width * level.height],
            agent: level.entry,
            level,
            params,
            task: TaskSpec::score(),
            seed: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            hp: 0,
            max_hp: 0,
            xl: 1,
            xp: 0,
            gold: 0,
            steps: 0,
            score: 0,
            kills: 0,
            attacks: 0,
            wounded: false,
            weak: false,
            visited: HashSet::new(),
            done: true,
            task_paid: false,
        };
        env.reset(0, TaskSpec::score());
        env
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn task(&self) -> TaskSpec {
        self.task
    }

    pub fn level(&self) -> &DungeonLevel {
        &self.level
    }

    pub fn agent(&self) -> Pos {
        self.agent
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn reset(&mut self, seed: u64, task: TaskSpec) -> Observation {
        let level = DungeonLevel::generate(seed, 1, &self.params.gen);
        self.reset_with_level(seed, task, level)
    }

    /// Starts an episode on a hand-built first level, with the agent at its
    /// entry. Deeper levels are still generated from `seed`.
    pub fn reset_with_level(&mut self, seed: u64, task: TaskSpec, level: DungeonLevel) -> Observation {
        self.seed = seed;
        self.task = task;
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_CAFE_F00D_D00D);
        self.level = level;
        self.seen = vec![false; self.level.width * self.level.height];
        self.agent = self.level.entry;
        self.max_hp = self.params.start_hp as i32;
        self.hp = self.max_hp;
        self.xl = 1;
        self.xp = 0;
        self.gold = 0;
        self.steps = 0;
        self.score = 0;
        self.kills = 0;
        self.attacks = 0;
        self.wounded = false;
        self.weak = false;
        self.visited.clear();
        self.done = false;
        self.task_paid = false;
        self.visit();
        self.observe(String::new())
    }

    pub fn progress(&self) -> Progress {
        Progress {
            xl: self.xl,
            dlvl: self.level.index,
            gold: self.gold,
            scout: self.visited.len() as u32,
            kills: self.kills,
        }
    }

    pub fn stats(&self) -> Stats {
        Stats {
            hp: self.hp.max(0) as u32,
            max_hp: self.max_hp as u32,
            xl: self.xl,
            dlvl: self.level.index,
            gold: self.gold,
            steps: self.steps,
            score: self.score,
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        self.steps += 1;
        let score_before = self.score;
        let mut msgs: Vec<String> = Vec::new();
        let mut descended = false;

        // ── Agent turn ──
        match action {
            Action::Move(d) => {
                let (dx, dy) = DIRS[d as usize];
                let target = self.agent.offset(dx, dy);
                if let Some(mi) = self.level.monster_at(target) {
                    self.attack_monster(mi, &mut msgs);
                } else {
                    self.try_move(target, dx != 0 && dy != 0, &mut msgs);
                }
            }
            Action::Search => self.search(&mut msgs),
            Action::Descend => {
                if self.level.tile(self.agent) == Tile::DownStairs {
                    self.descend(&mut msgs);
                    descended = true;
                } else {
                    msgs.push("You can't go down here.".into());
                }
            }
            Action::Attack => {
                let target = DIRS.iter().map(|&(dx, dy)| self.agent.offset(dx, dy)).find_map(|p| self.level.monster_at(p));
                match target {
                    Some(mi) => self.attack_monster(mi, &mut msgs),
                    None => msgs.push("You harmlessly attack thin air.".into()),
                }
            }
            Action::Pickup => match self.level.gold_at(self.agent) {
                Some(gi) => {
                    let (_, e) = self.level.entities.remove(gi);
                    let Entity::Gold(n) = e else { unreachable!("gold_at returned a non-gold entity") };
                    self.gold += n;
                    self.score += n;
                    msgs.push(format!("{n} gold pieces."));
                }
                None => msgs.push("There is nothing here to pick up.".into()),
            },
        }

        // ── World turn ──
        if !descended {
            self.monsters_act(&mut msgs);
        }
        self.maybe_respawn();
        self.regenerate(&mut msgs);
        if self.hp > 0 && !self.weak && self.hp * 3 < self.max_hp {
            self.weak = true;
            msgs.push("You feel weak.".into());
        }
        if self.hp * 3 >= self.max_hp {
            self.weak = false;
        }
        self.ambient(&mut msgs);
        self.visit();

        let dead = self.hp <= 0;
        if dead {
            self.hp = 0;
            msgs.truncate(MAX_SEGMENTS - 1);
            msgs.push("You die...".into());
        } else {
            msgs.truncate(MAX_SEGMENTS);
        }

        let mut success = false;
        let raw = match self.task {
            TaskSpec::Score { .. } => f64::from(self.score - score_before),
            TaskSpec::Staircase { level, .. } => {
                if !self.task_paid && self.level.index >= level {
                    self.task_paid = true;
                    success = true;
                    1.0
                } else {
                    0.0
                }
            }
            TaskSpec::RewardFree => 0.0,
        };
        self.done = dead || success || self.steps >= self.params.max_steps;
        let observation = self.observe(msgs.join(SEGMENT_SEPARATOR));
        Ok(StepResult {
            observation,
            reward: self.task.scale_extrinsic(raw),
            done: self.done,
            success,
            progress: self.progress(),
        })
    }

    // ── Agent actions ──

    fn try_move(&mut self, target: Pos, diagonal: bool, msgs: &mut Vec<String>) {
        let here = self.level.tile(self.agent);
        match self.level.tile(target) {
            Tile::ClosedDoor => {
                let i = self.level.idx(target);
                self.level.door_stiffness[i] = self.level.door_stiffness[i].saturating_sub(1);
                if self.level.door_stiffness[i] == 0 {
                    self.level.set(target, Tile::OpenDoor);
                    msgs.push("The door opens.".into());
                } else {
                    msgs.push("That door is closed.".into());
                }
            }
            t if t.walkable() => {
                if diagonal && (is_door(t) || is_door(here)) {
                    return;
                }
                self.agent = target;
                if t == Tile::DownStairs {
                    msgs.push("There is a staircase down here.".into());
                }
                if let Some(gi) = self.level.gold_at(target) {
                    if let Entity::Gold(n) = self.level.entities[gi].1 {
                        msgs.push(format!("You see here {n} gold pieces."));
                    }
                } else if let Some(k) = self.level.corpse_at(target) {
                    msgs.push(format!("You see here a {} corpse.", k.name()));
                }
            }
            _ => {}
        }
    }

    fn attack_monster(&mut self, mi: usize, msgs: &mut Vec<String>) {
        self.attacks += 1;
        let (pos, Entity::Monster(m)) = &mut self.level.entities[mi] else {
            unreachable!("monster index points at a monster")
        };
        let pos = *pos;
        let name = m.kind.name();
        // Every fourth swing misses.
        if self.attacks % 4 == 0 {
            msgs.push(format!("You miss the {name}."));
            return;
        }
        m.hp -= 2 + self.xl as i32;
        if m.hp <= 0 {
            let kind = m.kind;
            self.level.entities[mi] = (pos, Entity::Corpse(kind));
            self.kills += 1;
            self.score += 10;
            msgs.push(format!("You kill the {name}!"));
            self.xp += kind.stats().xp;
            while self.xp >= xp_threshold(self.xl + 1) {
                self.xl += 1;
                self.max_hp += self.params.hp_per_level as i32;
                self.hp += self.params.hp_per_level as i32;
                msgs.push(format!("Welcome to experience level {}.", self.xl));
            }
            if self.kills % 5 == 0 {
                msgs.push("You feel more confident in your combat skills.".into());
            }
        } else {
            msgs.push(format!("You hit the {name}."));
            if !m.fleeing && m.hp * 3 < m.kind.stats().hp {
                m.fleeing = true;
                msgs.push(format!("The {name} turns to flee."));
            }
        }
    }

    fn search(&mut self, msgs: &mut Vec<String>) {
        let mut found = false;
        for (dx, dy) in DIRS {
            let p = self.agent.offset(dx, dy);
            if self.level.tile(p) == Tile::HiddenPassage && self.rng.random_bool(self.params.search_prob) {
                self.level.set(p, Tile::Corridor);
                found = true;
            }
        }
        if found {
            msgs.push("You find a hidden passage.".into());
        }
    }

    fn descend(&mut self, msgs: &mut Vec<String>) {
        let next = self.level.index + 1;
        self.level = DungeonLevel::generate(self.seed, next, &self.params.gen);
        self.seen = vec![false; self.level.width * self.level.height];
        self.agent = self.level.entry;
        self.score += 50;
        msgs.push(format!("You climb down to dungeon level {next}."));
    }

    // ── World ──

    fn monster_sees_agent(&self, p: Pos) -> bool {
        let d = p.chebyshev(self.agent);
        if d <= self.params.chase_radius {
            return true;
        }
        match self.level.room_at(self.agent) {
            Some(r) => r.contains(p),
            None => false,
        }
    }

    fn monsters_act(&mut self, msgs: &mut Vec<String>) {
        let order: Vec<usize> = (0..self.level.entities.len())
            .filter(|&i| matches!(self.level.entities[i].1, Entity::Monster(_)))
            .collect();
        for i in order {
            if self.hp <= 0 {
                break;
            }
            let (pos, kind, fleeing) = match &self.level.entities[i] {
                (p, Entity::Monster(m)) => (*p, m.kind, m.fleeing),
                _ => continue,
            };
            let adjacent = pos.chebyshev(self.agent) == 1 && self.can_step(pos, self.agent);
            if adjacent && !fleeing {
                let Entity::Monster(m) = &mut self.level.entities[i].1 else { continue };
                m.attacks += 1;
                let st = kind.stats();
                if m.attacks % 3 == 0 {
                    msgs.push(format!("The {} misses!", st.name));
                } else {
                    self.hp -= st.damage;
                    if self.hp * 2 <= self.max_hp {
                        self.wounded = true;
                    }
                    msgs.push(format!("The {} {}!", st.name, st.verb));
                }
                continue;
            }
            let chase = self.monster_sees_agent(pos);
            let next = if chase {
                self.greedy_step(pos, fleeing)
            } else if self.rng.random_bool(self.params.wander_prob) {
                let options: Vec<Pos> = DIRS
                    .iter()
                    .map(|&(dx, dy)| pos.offset(dx, dy))
                    .filter(|&n| self.monster_can_enter(pos, n))
                    .collect();
                options.choose(&mut self.rng).copied()
            } else {
                None
            };
            if let Some(n) = next {
                self.level.entities[i].0 = n;
            }
        }
    }

    fn can_step(&self, from: Pos, to: Pos) -> bool {
        let diagonal = from.x != to.x && from.y != to.y;
        let (a, b) = (self.level.tile(from), self.level.tile(to));
        !(diagonal && (is_door(a) || is_door(b)))
    }

    fn monster_can_enter(&self, from: Pos, to: Pos) -> bool {
        self.level.tile(to).walkable()
            && to != self.agent
            && self.level.monster_at(to).is_none()
            && self.can_step(from, to)
    }

    fn greedy_step(&self, pos: Pos, away: bool) -> Option<Pos> {
        let d0 = pos.chebyshev(self.agent);
        let mut best: Option<(i32, Pos)> = None;
        for (dx, dy) in DIRS {
            let n = pos.offset(dx, dy);
            if !self.monster_can_enter(pos, n) {
                continue;
            }
            let d = n.chebyshev(self.agent);
            let key = if away { -d } else { d };
            if (away && d > d0) || (!away && d < d0) {
                if best.is_none_or(|(bk, _)| key < bk) {
                    best = Some((key, n));
                }
            }
        }
        best.map(|(_, n)| n)
    }

    fn maybe_respawn(&mut self) {
        if !self.rng.random_bool(self.params.respawn_prob) {
            return;
        }
        let room = self.rng.random_range(0..self.level.rooms.len());
        let r = self.level.rooms[room];
        if r.contains(self.agent) {
            return;
        }
        let cells: Vec<Pos> = r
            .interior()
            .filter(|&c| self.level.monster_at(c).is_none() && self.level.tile(c) == Tile::Floor)
            .collect();
        let Some(&c) = cells.choose(&mut self.rng) else { return };
        let kinds = MonsterKind::eligible(self.level.index);
        let kind = *kinds.choose(&mut self.rng).expect("some monster is eligible");
        self.level.entities.push((c, Entity::Monster(Monster::new(kind))));
    }

    fn regenerate(&mut self, msgs: &mut Vec<String>) {
        if self.hp > 0 && self.hp < self.max_hp && self.steps % self.params.regen_interval == 0 {
            self.hp += 1;
            if self.hp == self.max_hp && self.wounded {
                self.wounded = false;
                msgs.push("You feel much better.".into());
            }
        }
    }

    fn ambient(&mut self, msgs: &mut Vec<String>) {
        let near_hidden = DIRS.iter().any(|&(dx, dy)| self.level.tile(self.agent.offset(dx, dy)) == Tile::HiddenPassage);
        if near_hidden && self.rng.random_bool(self.params.draft_prob) {
            msgs.push("You feel a draft.".into());
        }
        if !self.rng.random_bool(self.params.ambient_prob) {
            return;
        }
        let mut pool = vec![
            "You hear the footsteps of a guard on patrol.",
            "You hear bubbling water.",
            "You hear a door open.",
            "You hear the splashing of a naiad.",
            "You hear a crunching sound.",
            "You hear some noises in the distance.",
            "You hear a distant squeak.",
        ];
        if self.level.has_gold() {
            pool.push("You hear someone counting money.");
            pool.push("You hear the chime of a cash register.");
        }
        let m = *pool.choose(&mut self.rng).expect("pool is non-empty");
        msgs.push(m.into());
    }

    // ── Observation ──

    fn visit(&mut self) {
        self.visited.insert((self.level.index, self.agent.x, self.agent.y));
        let lit: Option<crate::level::Room> = self.level.room_at(self.agent).copied();
        if let Some(r) = lit {
            for y in r.y0..=r.y1 {
                for x in r.x0..=r.x1 {
                    let i = self.level.idx(Pos::new(x, y));
                    self.seen[i] = true;
                }
            }
        }
        for dy in -1..=1 {
            for dx in -1..=1 {
                let p = self.agent.offset(dx, dy);
                if self.level.in_bounds(p) {
                    let i = self.level.idx(p);
                    self.seen[i] = true;
                }
            }
        }
    }

    fn visible_now(&self, p: Pos) -> bool {
        p.chebyshev(self.agent) <= 1 || self.level.room_at(self.agent).is_some_and(|r| r.contains(p))
    }

    fn observe(&self, caption: String) -> Observation {
        let mut view = vec![code::UNKNOWN; VIEW_SIDE * VIEW_SIDE];
        for vy in 0..VIEW_SIDE as i32 {
            for vx in 0..VIEW_SIDE as i32 {
                let p = self.agent.offset(vx - VIEW_RADIUS, vy - VIEW_RADIUS);
                if !self.level.in_bounds(p) || !self.seen[self.level.idx(p)] {
                    continue;
                }
                view[(vy as usize) * VIEW_SIDE + vx as usize] = tile_code(self.level.tile(p));
            }
        }
        for (p, e) in &self.level.entities {
            let (dx, dy) = (p.x - self.agent.x, p.y - self.agent.y);
            if dx.abs() > VIEW_RADIUS || dy.abs() > VIEW_RADIUS {
                continue;
            }
            let vi = ((dy + VIEW_RADIUS) as usize) * VIEW_SIDE + (dx + VIEW_RADIUS) as usize;
            match e {
                Entity::Gold(_) if self.seen[self.level.idx(*p)] => view[vi] = code::GOLD,
                Entity::Monster(_) if self.visible_now(*p) => view[vi] = code::MONSTER,
                _ => {}
            }
        }
        let centre = VIEW_RADIUS as usize * VIEW_SIDE + VIEW_RADIUS as usize;
        let here = view[centre];
        view[centre] = code::AGENT;
        Observation { view, here, stats: self.stats(), caption }
    }
}

fn is_door(t: Tile) -> bool {
    matches!(t, Tile::OpenDoor | Tile::ClosedDoor)
}

pub fn tile_code(t: Tile) -> u8 {
    match t {
        Tile::Wall | Tile::HiddenPassage => code::WALL,
        Tile::Floor => code::FLOOR,
        Tile::Corridor => code::CORRIDOR,
        Tile::ClosedDoor => code::CLOSED_DOOR,
        Tile::OpenDoor => code::OPEN_DOOR,
        Tile::DownStairs => code::STAIRS,
    }
}
