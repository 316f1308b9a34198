//! Uniform-random policy statistics on a staircase task.
//!
//! Usage: `cargo run --release --example random_policy -- [episodes] [level]`

use std::time::Instant;

use caverns::{Action, Caverns, EnvParams, TaskSpec, NUM_ACTIONS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let episodes: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);
    let level: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let mut env = Caverns::new(EnvParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    let (mut wins, mut deaths, mut steps, mut dlvl2, mut kills, mut gold, mut scout) = (0, 0, 0u64, 0, 0u64, 0u64, 0u64);
    let t0 = Instant::now();
    for ep in 0..episodes {
        env.reset(ep, TaskSpec::staircase(level));
        loop {
            let r = env.step(Action::from_index(rng.random_range(0..NUM_ACTIONS))).unwrap();
            steps += 1;
            if r.done {
                wins += r.success as u64;
                deaths += (r.observation.stats.hp == 0) as u64;
                dlvl2 += (r.progress.dlvl >= 2) as u64;
                kills += r.progress.kills as u64;
                gold += r.progress.gold as u64;
                scout += r.progress.scout as u64;
                break;
            }
        }
    }
    let n = episodes as f64;
    println!(
        "episodes={episodes} success={:.4} deaths={:.3} reached_dlvl2={:.3} mean_len={:.0} kills={:.2} gold={:.1} scout={:.1} steps/s={:.0}",
        wins as f64 / n,
        deaths as f64 / n,
        dlvl2 as f64 / n,
        steps as f64 / n,
        kills as f64 / n,
        gold as f64 / n,
        scout as f64 / n,
        steps as f64 / t0.elapsed().as_secs_f64()
    );
}
