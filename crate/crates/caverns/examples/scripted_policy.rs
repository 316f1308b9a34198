//! A hand-written explorer driven only by the policy features.
//!
//! Usage: `cargo run --release --example scripted_policy -- [episodes] [level]`

use caverns::features::policy_features;
use caverns::{Action, Caverns, EnvParams, TaskSpec};

fn first_step(f: &[f64], target: usize) -> Option<usize> {
    let block = &f[target * 10..target * 10 + 10];
    if block[8] == 0.0 {
        return None;
    }
    Some(block[..8].iter().position(|&v| v == 1.0).unwrap_or(usize::MAX))
}

fn choose(f: &[f64]) -> Action {
    let adjacent_monster = (0..8).any(|k| f[58 + k] == 1.0);
    if adjacent_monster {
        return Action::Attack;
    }
    if f[66] == 1.0 {
        return Action::Descend;
    }
    for target in [0, 3, 4] {
        match first_step(f, target) {
            Some(usize::MAX) => return Action::Search,
            Some(d) => return Action::Move(d as u8),
            None => {}
        }
    }
    Action::Search
}

fn main() {
    let mut args = std::env::args().skip(1);
    let episodes: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let level: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let mut env = Caverns::new(EnvParams::default());
    let (mut wins, mut deaths, mut len) = (0, 0, 0u64);
    for ep in 0..episodes {
        let mut obs = env.reset(ep, TaskSpec::staircase(level));
        loop {
            let r = env.step(choose(&policy_features(&obs))).unwrap();
            obs = r.observation.clone();
            if r.done {
                wins += r.success as u64;
                deaths += (r.observation.stats.hp == 0) as u64;
                len += r.observation.stats.steps as u64;
                break;
            }
        }
    }
    let n = episodes as f64;
    println!("episodes={episodes} success={:.3} deaths={:.3} mean_len={:.0}", wins as f64 / n, deaths as f64 / n, len as f64 / n);
}
