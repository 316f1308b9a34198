use lantern::appo::{collect_rollouts, push_rollout, ActorCritic, Corridor, EnvSlot, PolicySnapshot, PpoBuffer, PpoConfig, PpoLearner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SIDE: usize = 5;
const MAX_STEPS: usize = 12;

/// Trains on the corridor grid and returns the mean return of the last 200
/// finished episodes.
fn train_corridor(seed: u64, steps: u64, cfg: &PpoConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = ActorCritic::new(SIDE * SIDE, 5, &cfg.hidden, &mut rng);
    let mut learner = PpoLearner::new(net, cfg.clone());
    let mut slots: Vec<EnvSlot> =
        (0..cfg.num_envs).map(|i| EnvSlot::new(i, Box::new(Corridor::new(SIDE, MAX_STEPS)), seed, 3.0)).collect();
    let mut returns = Vec::new();
    let mut done_steps = 0;
    while done_steps < steps {
        let snap = PolicySnapshot::new(learner.net.clone(), learner.version());
        let mut buf = PpoBuffer::new(SIDE * SIDE);
        while buf.len() < cfg.batch {
            for b in collect_rollouts(&mut slots, &snap, cfg.rollout_len, &mut rng) {
                push_rollout(&mut buf, &b, &b.rewards, cfg);
                returns.extend(b.episodes.iter().map(|e| e.extrinsic_return));
                done_steps += b.len() as u64;
            }
        }
        learner.update(&mut buf, &mut rng);
    }
    let tail = &returns[returns.len().saturating_sub(200)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[test]
fn corridor_reaches_ninety_percent_of_optimal() {
    let cfg = PpoConfig::default();
    let optimal = Corridor::new(SIDE, MAX_STEPS).optimal_return();
    for seed in 0..3 {
        let r = train_corridor(seed, 200_000, &cfg);
        println!("seed {seed}: mean return {r:.3} of {optimal}");
        assert!(r >= 0.9 * optimal, "seed {seed}: {r} < 0.9 * {optimal}");
    }
}
