use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MainModel;
use crate::corpus::{TokenId, EOS, NUM_RESERVED};

/// Wraps a model and, with probability `epsilon`, replaces its greedy token
/// by a different valid token.
///
/// Every decision is derived from `(seed, context)` alone, so the wrapper is
/// still a pure function of the context and call order never matters.
#[derive(Debug, Clone)]
pub struct NoisyLm<M> {
    inner: M,
    epsilon: f64,
    seed: u64,
}

impl<M: MainModel> NoisyLm<M> {
    pub fn new(inner: M, epsilon: f64, seed: u64) -> Self {
        Self {
            inner,
            epsilon: epsilon.clamp(0.0, 1.0),
            seed,
        }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn context_rng(&self, context: &[TokenId]) -> ChaCha8Rng {
        let mut h = splitmix64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        for &tok in context {
            h = splitmix64(h ^ u64::from(tok));
        }
        h = splitmix64(h ^ context.len() as u64);
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl<M: MainModel> MainModel for NoisyLm<M> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn greedy_next(&self, context: &[TokenId]) -> TokenId {
        let greedy = self.inner.greedy_next(context);
        if self.epsilon <= 0.0 {
            return greedy;
        }
        let mut rng = self.context_rng(context);
        if rng.gen::<f64>() >= self.epsilon {
            return greedy;
        }
        // alternatives: EOS and every corpus token, minus the greedy choice
        let pool: Vec<TokenId> = std::iter::once(EOS)
            .chain(NUM_RESERVED as TokenId..self.vocab_size() as TokenId)
            .filter(|&t| t != greedy)
            .collect();
        if pool.is_empty() {
            return greedy;
        }
        pool[rng.gen_range(0..pool.len())]
    }
}
