use std::collections::HashMap;

use super::MainModel;
use crate::corpus::{tokenize_all, TokenId, Vocab, EOS, SOT};

pub const DEFAULT_ORDER: usize = 4;
pub const BACKOFF_FACTOR: f64 = 0.4;

// BACKOFF_FACTOR as an exact ratio so score ties are genuine ties.
const BACKOFF_NUM: u128 = 2;
const BACKOFF_DEN: u128 = 5;

/// `count / total * BACKOFF_FACTOR^depth`, kept exact.
#[derive(Debug, Clone, Copy)]
struct Score {
    depth: u32,
    count: u64,
    total: u64,
}

impl Score {
    fn cmp(&self, other: &Score) -> std::cmp::Ordering {
        let lhs = self.count as u128
            * BACKOFF_NUM.pow(self.depth)
            * BACKOFF_DEN.pow(other.depth)
            * other.total as u128;
        let rhs = other.count as u128
            * BACKOFF_NUM.pow(other.depth)
            * BACKOFF_DEN.pow(self.depth)
            * self.total as u128;
        lhs.cmp(&rhs)
    }
}

#[derive(Debug, Clone, Default)]
struct NextCounts {
    total: u64,
    /// (token, count) sorted by count desc, then token asc.
    ranked: Vec<(TokenId, u64)>,
    /// Same pairs sorted by token for membership tests.
    by_token: Vec<(TokenId, u64)>,
}

impl NextCounts {
    fn contains(&self, tok: TokenId) -> bool {
        self.by_token
            .binary_search_by_key(&tok, |&(t, _)| t)
            .is_ok()
    }
}

/// Greedy stupid-backoff n-gram model over `[SOT] ++ sentence ++ [EOS]`.
///
/// A token's score is its relative frequency after the longest history in
/// which it was observed, scaled by [`BACKOFF_FACTOR`] per shortened level.
/// The argmax is taken with ties going to the smallest token id.
#[derive(Debug, Clone)]
pub struct CorpusLm {
    order: usize,
    vocab_size: usize,
    table: HashMap<Vec<TokenId>, NextCounts>,
}

impl CorpusLm {
    pub fn from_corpus<S: AsRef<str>>(corpus: &[S], vocab: &Vocab, order: usize) -> Self {
        Self::from_sequences(&tokenize_all(corpus, vocab), vocab.len(), order)
    }

    /// `sequences` are tokenized sentences (no SOT, trailing EOS).
    pub fn from_sequences(sequences: &[Vec<TokenId>], vocab_size: usize, order: usize) -> Self {
        let order = order.max(1);
        let mut raw: HashMap<Vec<TokenId>, HashMap<TokenId, u64>> = HashMap::new();
        let mut padded = Vec::new();
        for seq in sequences {
            padded.clear();
            padded.push(SOT);
            padded.extend_from_slice(seq);
            for i in 1..padded.len() {
                let target = padded[i];
                for k in 0..order.min(i + 1) {
                    *raw.entry(padded[i - k..i].to_vec())
                        .or_default()
                        .entry(target)
                        .or_insert(0) += 1;
                }
            }
        }
        let table = raw
            .into_iter()
            .map(|(hist, next)| {
                let mut by_token: Vec<_> = next.into_iter().collect();
                by_token.sort_unstable();
                let mut ranked = by_token.clone();
                ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                let total = ranked.iter().map(|&(_, c)| c).sum();
                (
                    hist,
                    NextCounts {
                        total,
                        ranked,
                        by_token,
                    },
                )
            })
            .collect();
        Self {
            order,
            vocab_size,
            table,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl MainModel for CorpusLm {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn greedy_next(&self, context: &[TokenId]) -> TokenId {
        use std::cmp::Ordering::*;
        let max_hist = (self.order - 1).min(context.len());
        let mut higher: Vec<&NextCounts> = Vec::with_capacity(max_hist + 1);
        let mut best: Option<(Score, TokenId)> = None;
        for (depth, k) in (0..=max_hist).rev().enumerate() {
            let depth = depth as u32;
            let ceiling = Score {
                depth,
                count: 1,
                total: 1,
            };
            if best.is_some_and(|(s, _)| s.cmp(&ceiling) == Greater) {
                break;
            }
            let Some(next) = self.table.get(&context[context.len() - k..]) else {
                continue;
            };
            // the first token not already scored at a longer history is this
            // level's best newcomer
            let fresh = next
                .ranked
                .iter()
                .find(|(t, _)| !higher.iter().any(|h| h.contains(*t)));
            if let Some(&(tok, count)) = fresh {
                let score = Score {
                    depth,
                    count,
                    total: next.total,
                };
                let better = match best {
                    None => true,
                    Some((s, t)) => match score.cmp(&s) {
                        Greater => true,
                        Equal => tok < t,
                        Less => false,
                    },
                };
                if better {
                    best = Some((score, tok));
                }
            }
            higher.push(next);
        }
        best.map_or(EOS, |(_, tok)| tok)
    }
}
