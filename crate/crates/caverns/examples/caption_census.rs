//! Counts distinct captions seen under random play.
//!
//! Usage: `cargo run --release --example caption_census -- [steps]`

use std::collections::HashMap;

use caverns::{Action, Caverns, EnvParams, TaskSpec, NUM_ACTIONS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let steps: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2_000_000);
    let mut env = Caverns::new(EnvParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut ep = 0;
    let mut obs = env.reset(ep, TaskSpec::staircase(3));
    *counts.entry(obs.caption.clone()).or_default() += 1;
    for t in 0..steps {
        let a = Action::from_index(rng.random_range(0..NUM_ACTIONS));
        let r = env.step(a).unwrap();
        *counts.entry(r.observation.caption.clone()).or_default() += 1;
        if r.done {
            ep += 1;
            obs = env.reset(ep, TaskSpec::staircase(3));
            let _ = &obs;
        }
        if (t + 1) % 500_000 == 0 {
            println!("steps={} distinct={}", t + 1, counts.len());
        }
    }
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1));
    for (c, n) in v.iter().take(15) {
        println!("{n:>9} {c:?}");
    }
}
