//! Bag-of-words caption embeddings and the goal-similarity baseline reward.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinynn::{fnv1a, tokenize};

use super::math::episodic_normalize;

pub const BOW_DIM: usize = 64;
pub const BOW_SEED: u64 = 0x00b0_0e0b_0e5e_ed00;

/// Each token maps to a fixed pseudo-random vector in `[-1, 1]^dim` derived
/// from the seed and the token text; a text embeds to the sum over its tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BowEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for BowEmbedder {
    fn default() -> Self {
        Self { dim: BOW_DIM, seed: BOW_SEED }
    }
}

impl BowEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, seed }
    }

    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(token.as_bytes()));
        (0..self.dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    pub fn embed(&self, text: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for tok in tokenize(text) {
            for (o, v) in out.iter_mut().zip(self.token_vector(&tok)) {
                *o += v;
            }
        }
        out
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine of vectors with different lengths");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// `cos(embed(caption), embed(goal)) / N^z` for the `count`-th occurrence.
pub fn ellm_reward(embedder: &BowEmbedder, caption: &str, goal: &str, count: u32, z: f64) -> f64 {
    let sim = cosine(&embedder.embed(caption), &embedder.embed(goal));
    episodic_normalize(sim, count, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_examples() {
        let e = BowEmbedder::default();
        assert!(e.embed("").iter().all(|&x| x == 0.0));
        assert_eq!(e.embed("kill gold"), e.embed("gold kill"));
        let a = e.embed("a");
        let aa = e.embed("a a");
        assert!(a.iter().zip(&aa).all(|(x, y)| (2.0 * x - y).abs() < 1e-12));
    }

    #[test]
    fn ellm_examples() {
        let e = BowEmbedder::default();
        let g = "kill monsters";
        assert!((ellm_reward(&e, g, g, 1, 3.0) - 1.0).abs() < 1e-12);
        assert_eq!(ellm_reward(&e, "", g, 1, 3.0), 0.0);
        assert!((ellm_reward(&e, g, g, 2, 3.0) - 0.125).abs() < 1e-12);
    }
}
