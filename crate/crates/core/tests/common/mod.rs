#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tokenmap_sd::corpus::is_reserved;
use tokenmap_sd::{PruneConfig, TokenId, TokenMap};

pub type Enumerated = BTreeMap<Vec<TokenId>, BTreeMap<Vec<TokenId>, u64>>;

/// Counts every (n-gram, full remaining suffix) pair by direct enumeration
/// of start positions.
pub fn enumerate_ngrams(sequences: &[Vec<TokenId>], max_n: usize) -> Enumerated {
    let mut out = Enumerated::new();
    for seq in sequences {
        for start in 0..seq.len() {
            for n in 1..=max_n {
                let end = start + n;
                if end >= seq.len() {
                    break;
                }
                let key = &seq[start..end];
                if key.iter().any(|&t| is_reserved(t)) {
                    continue;
                }
                *out.entry(key.to_vec())
                    .or_default()
                    .entry(seq[end..].to_vec())
                    .or_insert(0) += 1;
            }
        }
    }
    out
}

pub fn map_as_counts(map: &TokenMap) -> Enumerated {
    map.entries()
        .map(|(key, cands)| {
            let mut m = BTreeMap::new();
            for c in cands {
                *m.entry(c.continuation.clone()).or_insert(0) += c.frequency;
            }
            (key.to_vec(), m)
        })
        .collect()
}

pub fn random_prune_config(rng: &mut ChaCha8Rng) -> PruneConfig {
    let max_candidates = rng.gen_range(1..=4);
    let mut len = 1;
    let mut min_len_by_count = BTreeMap::new();
    for count in 1..=max_candidates {
        if count > 1 {
            len += rng.gen_range(0..=8);
        }
        min_len_by_count.insert(count, len);
    }
    PruneConfig {
        max_candidates,
        min_len_by_count,
        min_frequency: rng.gen_range(1..=3),
    }
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
