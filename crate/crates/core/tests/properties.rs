use std::sync::atomic::AtomicBool;

use lantern::annotate::parse::{binary_completion, ranking_completion};
use lantern::annotate::{
    build_binary_prompt, build_ranking_prompt, mock_label, mock_preference, parse_binary_response, parse_ranking_response, subsample,
    AnnotationStore, Annotator, GoalVariant, MockAnnotator, Preference,
};
use lantern::rewards::{
    bt_probability, caption_features, classification_reward, ellm_reward, preference_nll, preference_nll_grad, retrieval_reward,
    BowEmbedder, ClassifierMode, EpisodicCounter, ModelKind, RewardLearner, RunningStats,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn label() -> impl Strategy<Value = Preference> {
    prop_oneof![Just(Preference::First), Just(Preference::Second), Just(Preference::None)]
}

fn goal() -> impl Strategy<Value = GoalVariant> {
    prop_oneof![Just(GoalVariant::Default), Just(GoalVariant::Combat), Just(GoalVariant::Gold)]
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-z]{1,8}", 0..8)
}

/// Captions drawn from game-like vocabulary plus arbitrary printable text.
fn caption() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::collection::vec(prop::sample::select(vec!["You", "kill", "the", "newt!", "5", "gold", "pieces.", "door", "hit", "miss", ""]), 0..7)
            .prop_map(|w| w.join(" ")),
        "[ -~]{0,40}",
    ]
}

proptest! {
    #[test]
    fn bt_complements_and_shift(r1 in -30.0..30.0f64, r2 in -30.0..30.0f64, c in -100.0..100.0f64) {
        let p = bt_probability(r1, r2);
        prop_assert!((p + bt_probability(r2, r1) - 1.0).abs() <= 1e-12);
        prop_assert!((bt_probability(r1 + c, r2 + c) - p).abs() <= 1e-12);
    }

    #[test]
    fn nll_slope_points_to_label_optimum(d in -20.0..20.0f64, base in -5.0..5.0f64, y in label()) {
        let g = preference_nll_grad(base + d, base, y);
        match y {
            Preference::First => prop_assert!(g < 0.0),
            Preference::Second => prop_assert!(g > 0.0),
            Preference::None => prop_assert!(g * d >= 0.0 && (d.abs() < 1e-12 || g != 0.0)),
        }
        prop_assert!(preference_nll(base + d, base, y).is_finite());
    }

    #[test]
    fn running_stats_match_two_pass(xs in prop::collection::vec(-1e3..1e3f64, 1..400), offset in -1e6..1e6f64) {
        let mut s = RunningStats::new();
        let shifted: Vec<f64> = xs.iter().map(|x| x + offset).collect();
        for &x in &shifted {
            s.push(x);
        }
        let n = shifted.len() as f64;
        let m = shifted.iter().sum::<f64>() / n;
        let sd = (shifted.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
        prop_assert!((s.mean() - m).abs() <= 1e-9 * m.abs().max(1.0));
        // Spread is measured against the data scale, not the offset.
        prop_assert!((s.std() - sd).abs() <= 1e-9 * sd.max(1.0));
        prop_assert!(s.std() >= 0.0);
    }

    #[test]
    fn episodic_total_matches_direct_sum(r in 0.0..2.0f64, k in 1u32..60, z in 1.05..5.0f64) {
        let mut counter = EpisodicCounter::new(z);
        let total: f64 = (0..k).map(|_| counter.normalize("same".to_string(), r)).sum();
        let direct: f64 = (1..=k).map(|n| r * (n as f64).powf(-z)).sum();
        prop_assert!((total - direct).abs() <= 1e-12 * direct.max(1.0));
        // Partial zeta sum plus an integral bound on the tail.
        let zeta_upper: f64 = (1..=k).map(|n| (n as f64).powf(-z)).sum::<f64>() + (k as f64).powf(1.0 - z) / (z - 1.0);
        prop_assert!(total <= r * zeta_upper + 1e-12);
        prop_assert_eq!(counter.count(&"same".to_string()), k);
        counter.reset();
        prop_assert_eq!(counter.count(&"same".to_string()), 0);
    }

    #[test]
    fn ellm_ignores_word_order(c in words(), g in words(), seed in any::<u64>(), n in 1u32..5) {
        use rand::seq::SliceRandom;
        let e = BowEmbedder::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut c2, mut g2) = (c.clone(), g.clone());
        c2.shuffle(&mut rng);
        g2.shuffle(&mut rng);
        let a = ellm_reward(&e, &c.join(" "), &g.join(" "), n, 3.0);
        let b = ellm_reward(&e, &c2.join(" "), &g2.join(" "), n, 3.0);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn classification_reward_monotone_in_eta(p in 0.0..1.0f64, e1 in 0.001..0.999f64, e2 in 0.001..0.999f64) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(classification_reward(p, hi, ClassifierMode::Binary) <= classification_reward(p, lo, ClassifierMode::Binary));
    }

    #[test]
    fn retrieval_returns_stored_label_or_zero(entries in prop::collection::vec((caption(), 0u8..2), 0..20), probe in caption()) {
        let mut store = AnnotationStore::new();
        let mut first = std::collections::HashMap::new();
        for (c, l) in &entries {
            store.insert_binary(c, *l, "test");
            first.entry(c.clone()).or_insert(*l);
        }
        for (c, l) in &first {
            prop_assert_eq!(retrieval_reward(c, &store), (*l as f64, true));
        }
        if !first.contains_key(&probe) {
            prop_assert_eq!(retrieval_reward(&probe, &store), (0.0, false));
        }
    }

    #[test]
    fn store_labels_never_change(c in caption(), l in 0u8..2) {
        let mut store = AnnotationStore::new();
        prop_assert!(store.insert_binary(&c, l, "a"));
        prop_assert!(!store.insert_binary(&c, 1 - l, "b"));
        prop_assert_eq!(store.lookup(&c), Some(l));
    }

    #[test]
    fn completions_parse_back(l in 0u8..2, y in label()) {
        prop_assert_eq!(parse_binary_response(&binary_completion(l)).unwrap(), l);
        prop_assert_eq!(parse_ranking_response(&ranking_completion(y)).unwrap(), y);
    }

    #[test]
    fn mock_answers_are_pure_and_parse(c1 in caption(), c2 in caption(), g in goal()) {
        let m = MockAnnotator::new();
        let cancel = AtomicBool::new(false);
        let prompts = [build_binary_prompt(&c1, g), build_ranking_prompt(&c1, &c2, g)];
        let a = m.complete_batch(&prompts, &cancel);
        let b = MockAnnotator::new().complete_batch(&prompts, &cancel);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(parse_binary_response(a[0].as_ref().unwrap()).unwrap(), mock_label(&c1, g));
        prop_assert_eq!(parse_ranking_response(a[1].as_ref().unwrap()).unwrap(), mock_preference(&c1, &c2, g));
    }
}

#[test]
fn subsample_counts_are_binomial() {
    for (rate, expected) in [(0.01, 100.0), (0.1, 1000.0)] {
        let sigma = (10_000.0 * rate * (1.0 - rate) as f64).sqrt();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kept = subsample((0..10_000).collect::<Vec<u32>>(), rate, &mut rng).len() as f64;
            assert!((kept - expected).abs() <= 3.0 * sigma, "rate {rate} seed {seed}: kept {kept}");
        }
    }
}

#[test]
fn reward_models_stay_finite_under_repeated_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vocab = ["You kill the newt!", "5 gold pieces.", "", "The door opens.", "You miss the jackal.", "It hits!"];
    let feats: Vec<_> = vocab.iter().map(|c| caption_features(c)).collect();
    let mut cls = RewardLearner::new(ModelKind::Classifier, 1e-2, &mut rng);
    let mut rank = RewardLearner::new(ModelKind::Ranker, 1e-2, &mut rng);
    for t in 0..5_000usize {
        let (a, b) = (&feats[t % feats.len()], &feats[(t * 7 + 3) % feats.len()]);
        cls.step_classifier(&[(a, (t % 3 == 0) as u8 as f64)]);
        let y = [Preference::First, Preference::Second, Preference::None][t % 3];
        rank.step_ranker(&[(a, b, y)]);
    }
    for m in [cls.model(), rank.model()] {
        assert!(m.params().iter().all(|p| p.is_finite()));
    }
    let p = cls.snapshot().output(&feats[0]);
    assert!(p > 0.0 && p < 1.0);
}
