//! Level generation.
//!
//! A level is a grid of room slots. Each slot holds one rectangular lit room;
//! rooms are joined along a random spanning tree of the slot grid plus a few
//! extra edges. Corridors are L-shaped and may contain a hidden segment that
//! must be found by searching. Generation depends only on `(seed, index)`.

use std::collections::VecDeque;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::monster::{Monster, MonsterKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Tile {
    Wall,
    Floor,
    Corridor,
    HiddenPassage,
    ClosedDoor,
    OpenDoor,
    DownStairs,
}

impl Tile {
    pub fn walkable(self) -> bool {
        matches!(self, Tile::Floor | Tile::Corridor | Tile::OpenDoor | Tile::DownStairs)
    }

    /// Walkable once hidden passages are revealed and doors opened.
    pub fn passable_when_revealed(self) -> bool {
        self != Tile::Wall
    }

    pub fn glyph(self) -> char {
        match self {
            Tile::Wall => '#',
            Tile::Floor => '.',
            Tile::Corridor => ',',
            Tile::HiddenPassage => 'H',
            Tile::ClosedDoor => '+',
            Tile::OpenDoor => '|',
            Tile::DownStairs => '>',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self { x: self.x + dx, y: self.y + dy }
    }

    pub fn chebyshev(self, o: Pos) -> i32 {
        (self.x - o.x).abs().max((self.y - o.y).abs())
    }
}

/// Room rectangle including its wall ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Room {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Room {
    pub fn contains(&self, p: Pos) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn interior_contains(&self, p: Pos) -> bool {
        p.x > self.x0 && p.x < self.x1 && p.y > self.y0 && p.y < self.y1
    }

    pub fn interior(&self) -> impl Iterator<Item = Pos> + '_ {
        ((self.y0 + 1)..self.y1).flat_map(move |y| ((self.x0 + 1)..self.x1).map(move |x| Pos::new(x, y)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entity {
    Gold(u32),
    Monster(Monster),
    Corpse(MonsterKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub width: usize,
    pub height: usize,
    pub slots_x: usize,
    pub slots_y: usize,
    pub max_depth: u32,
    /// Probability that a grid edge not on the spanning tree is also carved.
    pub extra_edge_prob: f64,
    /// Probability that a corridor hides one of its cells.
    pub hidden_prob: f64,
    /// Probability that a door cell is a closed door rather than a doorway.
    pub closed_door_prob: f64,
    pub max_door_stiffness: u8,
    pub gold_piles: (usize, usize),
    pub monsters_base: usize,
    pub monsters_per_depth: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            width: 21,
            height: 21,
            slots_x: 3,
            slots_y: 3,
            max_depth: 6,
            extra_edge_prob: 0.15,
            hidden_prob: 0.35,
            closed_door_prob: 0.5,
            max_door_stiffness: 3,
            gold_piles: (2, 4),
            monsters_base: 2,
            monsters_per_depth: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DungeonLevel {
    pub index: u32,
    pub width: usize,
    pub height: usize,
    pub tiles: Vec<Tile>,
    /// Bumps still needed to open each closed door, indexed like `tiles`.
    pub door_stiffness: Vec<u8>,
    pub rooms: Vec<Room>,
    pub entry: Pos,
    pub stairs: Option<Pos>,
    pub entities: Vec<(Pos, Entity)>,
}

fn level_seed(seed: u64, index: u32) -> u64 {
    // SplitMix64 finalizer over the pair keeps nearby seeds unrelated.
    let mut z = seed ^ (u64::from(index)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DungeonLevel {
    pub fn generate(seed: u64, index: u32, p: &GenParams) -> Self {
        assert!(index >= 1, "levels are numbered from 1");
        let mut rng = ChaCha8Rng::seed_from_u64(level_seed(seed, index));
        let (w, h) = (p.width, p.height);
        let slot_w = w / p.slots_x;
        let slot_h = h / p.slots_y;
        assert!(slot_w >= 5 && slot_h >= 5, "slots too small for a room");
        let mut lvl = DungeonLevel {
            index,
            width: w,
            height: h,
            tiles: vec![Tile::Wall; w * h],
            door_stiffness: vec![0; w * h],
            rooms: Vec::new(),
            entry: Pos::new(0, 0),
            stairs: None,
            entities: Vec::new(),
        };

        // ── Rooms ──
        for sy in 0..p.slots_y {
            for sx in 0..p.slots_x {
                let (ox, oy) = ((sx * slot_w) as i32, (sy * slot_h) as i32);
                // The last column and row of each slot stay free for corridors.
                let max_iw = slot_w as i32 - 3;
                let max_ih = slot_h as i32 - 3;
                let iw = rng.random_range(2..=max_iw);
                let ih = rng.random_range(2..=max_ih);
                let bx = ox + rng.random_range(0..=(slot_w as i32 - 1 - (iw + 2)));
                let by = oy + rng.random_range(0..=(slot_h as i32 - 1 - (ih + 2)));
                let room = Room { x0: bx, y0: by, x1: bx + iw + 1, y1: by + ih + 1 };
                for c in room.interior() {
                    lvl.set(c, Tile::Floor);
                }
                lvl.rooms.push(room);
            }
        }

        // ── Connectivity: random spanning tree plus extra edges ──
        let n = p.slots_x * p.slots_y;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for s in 0..n {
            let (sx, sy) = (s % p.slots_x, s / p.slots_x);
            if sx + 1 < p.slots_x {
                edges.push((s, s + 1));
            }
            if sy + 1 < p.slots_y {
                edges.push((s, s + p.slots_x));
            }
        }
        edges.shuffle(&mut rng);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        let mut chosen = Vec::new();
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                chosen.push((a, b));
            } else if rng.random_bool(p.extra_edge_prob) {
                chosen.push((a, b));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &chosen {
            adj[a].push(b);
            adj[b].push(a);
            lvl.carve_corridor(a, b, p, &mut rng);
        }

        // ── Entry and stairs ──
        let start = rng.random_range(0..n);
        let entry_cells: Vec<Pos> = lvl.rooms[start].interior().collect();
        lvl.entry = *entry_cells.choose(&mut rng).expect("room has an interior");
        if index < p.max_depth {
            let mut dist = vec![usize::MAX; n];
            let mut q = VecDeque::from([start]);
            dist[start] = 0;
            while let Some(s) = q.pop_front() {
                for &t in &adj[s] {
                    if dist[t] == usize::MAX {
                        dist[t] = dist[s] + 1;
                        q.push_back(t);
                    }
                }
            }
            let far = *dist.iter().max().expect("non-empty");
            let candidates: Vec<usize> = (0..n).filter(|&s| dist[s] == far).collect();
            let target = *candidates.choose(&mut rng).expect("farthest room exists");
            let cells: Vec<Pos> = lvl.rooms[target].interior().filter(|&c| c != lvl.entry).collect();
            let st = *cells.choose(&mut rng).expect("room has a free cell");
            lvl.set(st, Tile::DownStairs);
            lvl.stairs = Some(st);
        }

        // ── Entities ──
        let mut free: Vec<Pos> = lvl
            .rooms
            .iter()
            .flat_map(|r| r.interior().collect::<Vec<_>>())
            .filter(|&c| c != lvl.entry && Some(c) != lvl.stairs)
            .collect();
        free.shuffle(&mut rng);
        let piles = rng.random_range(p.gold_piles.0..=p.gold_piles.1);
        for _ in 0..piles {
            if let Some(c) = free.pop() {
                let amount = rng.random_range(1..=(8 * index + 12));
                lvl.entities.push((c, Entity::Gold(amount)));
            }
        }
        let start_room = lvl.rooms[start];
        free.retain(|&c| !start_room.contains(c));
        let kinds = MonsterKind::eligible(index);
        let count = p.monsters_base + p.monsters_per_depth * (index as usize - 1);
        for _ in 0..count {
            if let Some(c) = free.pop() {
                let kind = *kinds.choose(&mut rng).expect("some monster is eligible");
                lvl.entities.push((c, Entity::Monster(Monster::new(kind))));
            }
        }
        lvl
    }

    fn carve_corridor(&mut self, a: usize, b: usize, p: &GenParams, rng: &mut ChaCha8Rng) {
        let (ra, rb) = (self.rooms[a], self.rooms[b]);
        let horizontal = b == a + 1;
        let mut path = Vec::new();
        let (da, db);
        if horizontal {
            let ya = rng.random_range((ra.y0 + 1)..ra.y1);
            let yb = rng.random_range((rb.y0 + 1)..rb.y1);
            da = Pos::new(ra.x1, ya);
            db = Pos::new(rb.x0, yb);
            let xm = rng.random_range((ra.x1 + 1)..rb.x0);
            for x in (ra.x1 + 1)..=xm {
                path.push(Pos::new(x, ya));
            }
            for y in ya.min(yb)..=ya.max(yb) {
                path.push(Pos::new(xm, y));
            }
            for x in xm..rb.x0 {
                path.push(Pos::new(x, yb));
            }
        } else {
            let xa = rng.random_range((ra.x0 + 1)..ra.x1);
            let xb = rng.random_range((rb.x0 + 1)..rb.x1);
            da = Pos::new(xa, ra.y1);
            db = Pos::new(xb, rb.y0);
            let ym = rng.random_range((ra.y1 + 1)..rb.y0);
            for y in (ra.y1 + 1)..=ym {
                path.push(Pos::new(xa, y));
            }
            for x in xa.min(xb)..=xa.max(xb) {
                path.push(Pos::new(x, ym));
            }
            for y in ym..rb.y0 {
                path.push(Pos::new(xb, y));
            }
        }
        path.dedup();
        for door in [da, db] {
            if self.tile(door) == Tile::Wall {
                if rng.random_bool(p.closed_door_prob) {
                    self.set(door, Tile::ClosedDoor);
                    let i = self.idx(door);
                    self.door_stiffness[i] = rng.random_range(1..=p.max_door_stiffness);
                } else {
                    self.set(door, Tile::OpenDoor);
                }
            }
        }
        for &c in &path {
            if self.tile(c) == Tile::Wall {
                self.set(c, Tile::Corridor);
            }
        }
        if rng.random_bool(p.hidden_prob) {
            let c = *path.choose(rng).expect("corridor is non-empty");
            if self.tile(c) == Tile::Corridor {
                self.set(c, Tile::HiddenPassage);
            }
        }
    }

    /// Builds a level from glyph rows as produced by [`DungeonLevel::render`],
    /// with `@` marking the entry on a floor cell. No rooms are recorded, so
    /// nothing is lit. Intended for scripted scenarios.
    pub fn from_rows(index: u32, rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut lvl = DungeonLevel {
            index,
            width,
            height,
            tiles: vec![Tile::Wall; width * height],
            door_stiffness: vec![0; width * height],
            rooms: Vec::new(),
            entry: Pos::new(0, 0),
            stairs: None,
            entities: Vec::new(),
        };
        for (y, row) in rows.iter().enumerate() {
            assert_eq!(row.chars().count(), width, "ragged level rows");
            for (x, ch) in row.chars().enumerate() {
                let p = Pos::new(x as i32, y as i32);
                let t = match ch {
                    '#' => Tile::Wall,
                    '.' | '@' => Tile::Floor,
                    ',' => Tile::Corridor,
                    'H' => Tile::HiddenPassage,
                    '+' => Tile::ClosedDoor,
                    '|' => Tile::OpenDoor,
                    '>' => Tile::DownStairs,
                    _ => panic!("unknown glyph {ch:?}"),
                };
                lvl.set(p, t);
                match ch {
                    '@' => lvl.entry = p,
                    '>' => lvl.stairs = Some(p),
                    '+' => {
                        let i = lvl.idx(p);
                        lvl.door_stiffness[i] = 1;
                    }
                    _ => {}
                }
            }
        }
        lvl
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    pub fn idx(&self, p: Pos) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    /// Out-of-bounds cells read as wall.
    pub fn tile(&self, p: Pos) -> Tile {
        if self.in_bounds(p) {
            self.tiles[self.idx(p)]
        } else {
            Tile::Wall
        }
    }

    pub fn set(&mut self, p: Pos, t: Tile) {
        let i = self.idx(p);
        self.tiles[i] = t;
    }

    pub fn room_at(&self, p: Pos) -> Option<&Room> {
        self.rooms.iter().find(|r| r.contains(p))
    }

    pub fn monster_at(&self, p: Pos) -> Option<usize> {
        self.entities.iter().position(|(c, e)| *c == p && matches!(e, Entity::Monster(_)))
    }

    pub fn gold_at(&self, p: Pos) -> Option<usize> {
        self.entities.iter().position(|(c, e)| *c == p && matches!(e, Entity::Gold(_)))
    }

    pub fn corpse_at(&self, p: Pos) -> Option<MonsterKind> {
        self.entities.iter().find_map(|(c, e)| match e {
            Entity::Corpse(k) if *c == p => Some(*k),
            _ => None,
        })
    }

    pub fn has_gold(&self) -> bool {
        self.entities.iter().any(|(_, e)| matches!(e, Entity::Gold(_)))
    }

    /// Cells reachable from `from` treating hidden passages and closed doors
    /// as passable, moving in 8 directions.
    pub fn reachable_revealed(&self, from: Pos) -> Vec<bool> {
        let mut seen = vec![false; self.width * self.height];
        if !self.in_bounds(from) {
            return seen;
        }
        let mut q = VecDeque::from([from]);
        seen[self.idx(from)] = true;
        while let Some(c) = q.pop_front() {
            for (dx, dy) in crate::env::DIRS {
                let n = c.offset(dx, dy);
                if self.in_bounds(n) && self.tile(n).passable_when_revealed() && !seen[self.idx(n)] {
                    seen[self.idx(n)] = true;
                    q.push_back(n);
                }
            }
        }
        seen
    }

    pub fn render(&self) -> Vec<String> {
        (0..self.height as i32)
            .map(|y| (0..self.width as i32).map(|x| self.tile(Pos::new(x, y)).glyph()).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let p = GenParams::default();
        assert_eq!(DungeonLevel::generate(3, 2, &p), DungeonLevel::generate(3, 2, &p));
        assert_ne!(DungeonLevel::generate(3, 2, &p).tiles, DungeonLevel::generate(4, 2, &p).tiles);
    }

    #[test]
    fn bottom_level_has_no_stairs() {
        let p = GenParams::default();
        assert!(DungeonLevel::generate(1, p.max_depth, &p).stairs.is_none());
        assert!(DungeonLevel::generate(1, 1, &p).stairs.is_some());
    }

    #[test]
    fn stairs_reachable() {
        let p = GenParams::default();
        for seed in 0..200 {
            let lvl = DungeonLevel::generate(seed, 1 + (seed % 5) as u32, &p);
            let reach = lvl.reachable_revealed(lvl.entry);
            let st = lvl.stairs.unwrap();
            assert!(reach[lvl.idx(st)], "seed {seed}\n{}", lvl.render().join("\n"));
        }
    }
}
