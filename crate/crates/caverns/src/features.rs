//! Dense policy features computed from an [`Observation`].
//!
//! A breadth-first search over the remembered view gives, for each target
//! class, the first step of a shortest path, whether a target is known, and
//! how far away it is. Local occupancy, normalized stats, and a small hashed
//! caption embedding complete the vector.

use std::collections::VecDeque;

use crate::env::{code, Observation, DIRS, VIEW_RADIUS, VIEW_SIDE};

const TARGETS: usize = 5;
const PER_TARGET: usize = 10;
pub const CAPTION_FEATURES: usize = 16;
pub const FEATURE_DIM: usize = TARGETS * PER_TARGET + 16 + 2 + 5 + CAPTION_FEATURES;

const NO_STEP: u8 = u8::MAX;

fn passable(c: u8) -> bool {
    matches!(
        c,
        code::FLOOR | code::CORRIDOR | code::CLOSED_DOOR | code::OPEN_DOOR | code::STAIRS | code::GOLD | code::MONSTER | code::AGENT
    )
}

fn is_door(c: u8) -> bool {
    matches!(c, code::CLOSED_DOOR | code::OPEN_DOOR)
}

struct Grid<'a> {
    view: &'a [u8],
    here: u8,
}

impl Grid<'_> {
    fn get(&self, x: i32, y: i32) -> u8 {
        if x < 0 || y < 0 || x >= VIEW_SIDE as i32 || y >= VIEW_SIDE as i32 {
            return code::UNKNOWN;
        }
        if x == VIEW_RADIUS && y == VIEW_RADIUS {
            return self.here;
        }
        self.view[y as usize * VIEW_SIDE + x as usize]
    }

    fn step_ok(&self, x: i32, y: i32, dx: i32, dy: i32) -> bool {
        let to = self.get(x + dx, y + dy);
        if !passable(to) {
            return false;
        }
        !(dx != 0 && dy != 0 && (is_door(to) || is_door(self.get(x, y))))
    }

    fn is_frontier(&self, x: i32, y: i32) -> bool {
        let c = self.get(x, y);
        passable(c) && DIRS.iter().any(|&(dx, dy)| self.get(x + dx, y + dy) == code::UNKNOWN)
    }

    fn is_dead_end(&self, x: i32, y: i32) -> bool {
        if !matches!(self.get(x, y), code::CORRIDOR | code::OPEN_DOOR) {
            return false;
        }
        let mut open = 0;
        for (dx, dy) in DIRS {
            let c = self.get(x + dx, y + dy);
            if c == code::UNKNOWN {
                return false;
            }
            if self.step_ok(x, y, dx, dy) {
                open += 1;
            }
        }
        open <= 1
    }
}

pub fn policy_features(obs: &Observation) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURE_DIM);
    let g = Grid { view: &obs.view, here: obs.here };
    let n = VIEW_SIDE * VIEW_SIDE;
    let mut dist = vec![u16::MAX; n];
    let mut first = vec![NO_STEP; n];
    let start = VIEW_RADIUS as usize * VIEW_SIDE + VIEW_RADIUS as usize;
    dist[start] = 0;
    let mut q = VecDeque::from([(VIEW_RADIUS, VIEW_RADIUS)]);
    let mut best: [Option<(u16, u8)>; TARGETS] = [None; TARGETS];
    while let Some((x, y)) = q.pop_front() {
        let i = y as usize * VIEW_SIDE + x as usize;
        let c = g.get(x, y);
        let d = dist[i];
        let classes = [
            c == code::STAIRS,
            c == code::GOLD,
            c == code::MONSTER,
            g.is_frontier(x, y),
            g.is_dead_end(x, y),
        ];
        for (t, hit) in classes.into_iter().enumerate() {
            if hit && best[t].is_none() {
                best[t] = Some((d, first[i]));
            }
        }
        // Monsters block paths beyond them; the agent attacks rather than passes.
        if c == code::MONSTER {
            continue;
        }
        for (k, &(dx, dy)) in DIRS.iter().enumerate() {
            if !g.step_ok(x, y, dx, dy) {
                continue;
            }
            let j = (y + dy) as usize * VIEW_SIDE + (x + dx) as usize;
            if dist[j] == u16::MAX {
                dist[j] = d + 1;
                first[j] = if i == start { k as u8 } else { first[i] };
                q.push_back((x + dx, y + dy));
            }
        }
    }
    for b in best {
        let mut block = [0.0; PER_TARGET];
        if let Some((d, step)) = b {
            if step != NO_STEP {
                block[step as usize] = 1.0;
            }
            block[8] = 1.0;
            block[9] = (f64::from(d) / 20.0).min(1.0);
        }
        out.extend_from_slice(&block);
    }
    for &(dx, dy) in &DIRS {
        out.push(if g.step_ok(VIEW_RADIUS, VIEW_RADIUS, dx, dy) { 1.0 } else { 0.0 });
    }
    for &(dx, dy) in &DIRS {
        out.push(if g.get(VIEW_RADIUS + dx, VIEW_RADIUS + dy) == code::MONSTER { 1.0 } else { 0.0 });
    }
    out.push(if obs.here == code::STAIRS { 1.0 } else { 0.0 });
    out.push(if obs.here == code::GOLD { 1.0 } else { 0.0 });
    let s = &obs.stats;
    out.push(if s.max_hp > 0 { f64::from(s.hp) / f64::from(s.max_hp) } else { 0.0 });
    out.push(f64::from(s.xl) / 10.0);
    out.push(f64::from(s.dlvl) / 6.0);
    out.push((f64::from(s.gold) / 100.0).min(1.0));
    out.push((f64::from(s.steps) / 2000.0).min(1.0));
    out.extend(tinynn::features::featurize_caption_dense(&obs.caption, CAPTION_FEATURES));
    debug_assert_eq!(out.len(), FEATURE_DIM);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Caverns, EnvParams};
    use crate::task::TaskSpec;

    #[test]
    fn dimension_and_range() {
        let mut env = Caverns::new(EnvParams::default());
        for seed in 0..20 {
            let obs = env.reset(seed, TaskSpec::staircase(3));
            let f = policy_features(&obs);
            assert_eq!(f.len(), FEATURE_DIM);
            assert!(f[..FEATURE_DIM - CAPTION_FEATURES].iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn stairs_direction_matches_known_layout() {
        let mut view = vec![code::WALL; VIEW_SIDE * VIEW_SIDE];
        let c = VIEW_RADIUS as usize;
        for x in c..c + 4 {
            view[c * VIEW_SIDE + x] = code::FLOOR;
        }
        view[c * VIEW_SIDE + c + 3] = code::STAIRS;
        view[c * VIEW_SIDE + c] = code::AGENT;
        let obs = Observation { view, here: code::FLOOR, stats: Default::default(), caption: String::new() };
        let f = policy_features(&obs);
        // East is direction index 2.
        assert_eq!(&f[..PER_TARGET], &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 3.0 / 20.0]);
    }
}
