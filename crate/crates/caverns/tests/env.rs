use std::collections::HashSet;

use caverns::dump::TrajectoryWriter;
use caverns::level::Entity;
use caverns::{is_well_formed, Action, Caverns, DungeonLevel, EnvError, EnvParams, GenParams, TaskSpec, NUM_ACTIONS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quiet_params() -> EnvParams {
    EnvParams { ambient_prob: 0.0, draft_prob: 0.0, respawn_prob: 0.0, ..EnvParams::default() }
}

fn run_random(seed: u64, policy_seed: u64, steps: usize) -> Vec<(String, f64, u32)> {
    let mut env = Caverns::new(EnvParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
    env.reset(seed, TaskSpec::score());
    let mut out = Vec::new();
    for _ in 0..steps {
        let r = env.step(Action::from_index(rng.random_range(0..NUM_ACTIONS))).unwrap();
        out.push((r.observation.caption.clone(), r.reward, r.progress.scout));
        if r.done {
            break;
        }
    }
    out
}

#[test]
fn reset_initial_state() {
    let mut env = Caverns::new(EnvParams::default());
    let a = env.reset(7, TaskSpec::score());
    let b = env.reset(7, TaskSpec::score());
    assert_eq!(a, b);
    assert_eq!(a.stats.dlvl, 1);
    assert_eq!(a.stats.gold, 0);
    assert_eq!(a.caption, "");
    assert_eq!(env.progress().scout, 1);
}

#[test]
fn pickup_five_gold() {
    let mut lvl = DungeonLevel::from_rows(1, &["#####", "#@..#", "#####"]);
    lvl.entities.push((lvl.entry, Entity::Gold(5)));
    let mut env = Caverns::new(quiet_params());
    env.reset_with_level(1, TaskSpec::score(), lvl);
    let r = env.step(Action::Pickup).unwrap();
    assert_eq!(r.observation.caption, "5 gold pieces.");
    assert_eq!(r.observation.stats.gold, 5);
    assert!((r.reward - 0.5).abs() < 1e-12);
    let r = env.step(Action::Pickup).unwrap();
    assert_eq!(r.observation.caption, "There is nothing here to pick up.");
}

#[test]
fn search_finds_hidden_passage() {
    let lvl = DungeonLevel::from_rows(1, &["#####", "#@H,#", "#####"]);
    let mut env = Caverns::new(EnvParams { search_prob: 1.0, ..quiet_params() });
    env.reset_with_level(1, TaskSpec::score(), lvl);
    let r = env.step(Action::Search).unwrap();
    assert_eq!(r.observation.caption, "You find a hidden passage.");
    let r = env.step(Action::Move(2)).unwrap();
    assert_eq!(r.observation.caption, "");
    assert_eq!(env.agent().x, 2);
}

#[test]
fn move_into_wall_is_a_no_op() {
    let lvl = DungeonLevel::from_rows(1, &["#####", "#@..#", "#####"]);
    let mut env = Caverns::new(quiet_params());
    env.reset_with_level(1, TaskSpec::score(), lvl);
    let before = env.agent();
    let r = env.step(Action::Move(0)).unwrap();
    assert_eq!(r.observation.caption, "");
    assert_eq!(r.reward, 0.0);
    assert_eq!(env.agent(), before);
}

#[test]
fn closed_door_opens_after_bumps() {
    let mut lvl = DungeonLevel::from_rows(1, &["#####", "#@+,#", "#####"]);
    let i = lvl.idx(caverns::Pos::new(2, 1));
    lvl.door_stiffness[i] = 2;
    let mut env = Caverns::new(quiet_params());
    env.reset_with_level(1, TaskSpec::score(), lvl);
    assert_eq!(env.step(Action::Move(2)).unwrap().observation.caption, "That door is closed.");
    assert_eq!(env.step(Action::Move(2)).unwrap().observation.caption, "The door opens.");
    env.step(Action::Move(2)).unwrap();
    assert_eq!(env.agent().x, 2);
}

#[test]
fn kill_and_level_up() {
    let mut lvl = DungeonLevel::from_rows(1, &["#####", "#@..#", "#####"]);
    lvl.entities.push((caverns::Pos::new(2, 1), Entity::Monster(caverns::monster::Monster::new(caverns::MonsterKind::Newt))));
    let mut env = Caverns::new(quiet_params());
    env.reset_with_level(1, TaskSpec::score(), lvl);
    let r = env.step(Action::Attack).unwrap();
    assert_eq!(r.observation.caption, "You kill the newt!");
    assert_eq!(r.progress.kills, 1);
    assert!((r.reward - 1.0).abs() < 1e-12);
    let r = env.step(Action::Move(2)).unwrap();
    assert_eq!(r.observation.caption, "You see here a newt corpse.");
}

#[test]
fn staircase_pays_once_and_ends_episode() {
    let lvl = DungeonLevel::from_rows(1, &["#####", "#@>.#", "#####"]);
    let mut env = Caverns::new(quiet_params());
    env.reset_with_level(3, TaskSpec::staircase(2), lvl);
    let r = env.step(Action::Descend).unwrap();
    assert_eq!(r.observation.caption, "You can't go down here.");
    assert_eq!(r.reward, 0.0);
    let r = env.step(Action::Move(2)).unwrap();
    assert_eq!(r.observation.caption, "There is a staircase down here.");
    let r = env.step(Action::Descend).unwrap();
    assert_eq!(r.observation.caption, "You climb down to dungeon level 2.");
    assert_eq!(r.reward, 10.0);
    assert!(r.done && r.success);
    assert_eq!(env.step(Action::Search), Err(EnvError::EpisodeOver));
}

#[test]
fn episode_cap() {
    let lvl = DungeonLevel::from_rows(1, &["###", "#@#", "###"]);
    let mut env = Caverns::new(EnvParams { max_steps: 5, ..quiet_params() });
    env.reset_with_level(0, TaskSpec::RewardFree, lvl);
    for k in 1..=5 {
        let r = env.step(Action::Search).unwrap();
        assert_eq!(r.done, k == 5);
        assert_eq!(r.reward, 0.0);
    }
    assert!(env.step(Action::Search).is_err());
}

#[test]
fn random_policy_rarely_solves_staircase3() {
    let mut env = Caverns::new(EnvParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let episodes = 1000;
    let mut wins = 0;
    for ep in 0..episodes {
        env.reset(ep, TaskSpec::staircase(3));
        loop {
            let r = env.step(Action::from_index(rng.random_range(0..NUM_ACTIONS))).unwrap();
            if r.done {
                wins += u32::from(r.success);
                break;
            }
        }
    }
    let rate = f64::from(wins) / episodes as f64;
    assert!(rate < 0.01, "random success rate {rate}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_is_pure(seed in any::<u64>(), index in 1u32..=6) {
        let p = GenParams::default();
        prop_assert_eq!(DungeonLevel::generate(seed, index, &p), DungeonLevel::generate(seed, index, &p));
    }

    #[test]
    fn stairs_reachable_once_revealed(seed in any::<u64>(), index in 1u32..6) {
        let lvl = DungeonLevel::generate(seed, index, &GenParams::default());
        let reach = lvl.reachable_revealed(lvl.entry);
        let st = lvl.stairs.expect("non-bottom level has stairs");
        prop_assert!(reach[lvl.idx(st)]);
    }

    #[test]
    fn trajectories_are_deterministic(seed in 0u64..10_000, policy in 0u64..10_000) {
        prop_assert_eq!(run_random(seed, policy, 400), run_random(seed, policy, 400));
    }

    #[test]
    fn captions_stay_in_grammar(seed in 0u64..10_000, policy in 0u64..10_000) {
        for (caption, _, _) in run_random(seed, policy, 2000) {
            prop_assert!(is_well_formed(&caption), "caption outside grammar: {:?}", caption);
        }
    }

    #[test]
    fn scout_matches_replay(seed in 0u64..10_000, policy in 0u64..10_000) {
        let mut env = Caverns::new(EnvParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(policy);
        let start = env.reset(seed, TaskSpec::score());
        let mut dump = TrajectoryWriter::new(Vec::new());
        let mut last_scout = 1;
        loop {
            let a = Action::from_index(rng.random_range(0..NUM_ACTIONS));
            let r = env.step(a).unwrap();
            prop_assert!(r.progress.scout >= last_scout);
            prop_assert!(r.observation.stats.dlvl >= 1);
            last_scout = r.progress.scout;
            dump.record(a, &r, env.agent()).unwrap();
            if r.done || r.observation.stats.steps >= 600 {
                break;
            }
        }
        // Independent replay from the dump: the set of (level, x, y) positions.
        let text = String::from_utf8(dump.into_inner()).unwrap();
        let mut cells = HashSet::new();
        let lvl = DungeonLevel::generate(seed, 1, &GenParams::default());
        cells.insert((1u64, i64::from(lvl.entry.x), i64::from(lvl.entry.y)));
        let _ = start;
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            cells.insert((
                v["stats"]["dlvl"].as_u64().unwrap(),
                v["x"].as_i64().unwrap(),
                v["y"].as_i64().unwrap(),
            ));
        }
        prop_assert_eq!(cells.len() as u32, last_scout);
    }
}
