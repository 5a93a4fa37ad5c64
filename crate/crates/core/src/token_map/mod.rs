//! The n-gram token map: keys of 1..=N corpus tokens mapped to ranked
//! candidate continuations mined from the same corpus.
//!
//! A raw map stores, for every key occurrence, the full remaining suffix of
//! the sentence (EOS included). [`prune`] then ranks, truncates and merges
//! each key's candidates so that multi-candidate drafts are only kept when
//! they are long enough to pay for their verification cost.

mod io;
mod prune;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::corpus::{is_reserved, TokenId, Vocab};
use crate::error::{Error, Result};

pub use io::{load_map, save_map, SCHEMA_VERSION};
pub use prune::{merge_candidates, prune, PruneConfig};

pub const DEFAULT_MAX_N: usize = 3;

/// A continuation that followed some key in the corpus, with its count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub continuation: Vec<TokenId>,
    pub frequency: u64,
}

impl Candidate {
    pub fn new(continuation: Vec<TokenId>, frequency: u64) -> Self {
        Self {
            continuation,
            frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.continuation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.continuation.is_empty()
    }
}

/// Ranking used for every candidate list: longer first, then more frequent,
/// then lexicographically smaller continuation.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.continuation
        .len()
        .cmp(&a.continuation.len())
        .then_with(|| b.frequency.cmp(&a.frequency))
        .then_with(|| a.continuation.cmp(&b.continuation))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMap {
    max_n: usize,
    entries: BTreeMap<Vec<TokenId>, Vec<Candidate>>,
    prune_config: Option<PruneConfig>,
    vocab: Option<Vocab>,
}

impl TokenMap {
    /// An empty map; every lookup misses.
    pub fn empty(max_n: usize) -> Result<Self> {
        if max_n < 1 {
            return Err(Error::InvalidConfig("max_n must be at least 1".into()));
        }
        Ok(Self {
            max_n,
            entries: BTreeMap::new(),
            prune_config: None,
            vocab: None,
        })
    }

    pub(crate) fn from_parts(
        max_n: usize,
        entries: BTreeMap<Vec<TokenId>, Vec<Candidate>>,
        prune_config: Option<PruneConfig>,
        vocab: Option<Vocab>,
    ) -> Self {
        Self {
            max_n,
            entries,
            prune_config,
            vocab,
        }
    }

    /// Attaches the vocabulary the map's token ids refer to.
    pub fn with_vocab(mut self, vocab: Vocab) -> Self {
        self.vocab = Some(vocab);
        self
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn vocab(&self) -> Option<&Vocab> {
        self.vocab.as_ref()
    }

    /// The configuration this map was pruned with, `None` for a raw map.
    pub fn prune_config(&self) -> Option<&PruneConfig> {
        self.prune_config.as_ref()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[TokenId], &[Candidate])> {
        self.entries
            .iter()
            .map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    pub fn get(&self, key: &[TokenId]) -> Option<&[Candidate]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn key_count(&self) -> usize {
        self.entries.len()
    }

    pub fn candidate_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Candidates of the longest key formed from the trailing non-reserved
    /// tokens of `context`, or an empty slice when no key matches.
    pub fn lookup(&self, context: &[TokenId]) -> &[Candidate] {
        let mut tail: Vec<TokenId> = context
            .iter()
            .rev()
            .copied()
            .filter(|&t| !is_reserved(t))
            .take(self.max_n)
            .collect();
        tail.reverse();
        (1..=tail.len())
            .rev()
            .find_map(|n| self.entries.get(&tail[tail.len() - n..]))
            .map_or(&[], Vec::as_slice)
    }
}

/// Builds the unpruned map: every key of length `1..=max_n` ending right
/// before position `p` maps to the suffix starting at `p`. Keys never
/// contain reserved tokens. Identical (key, continuation) pairs are counted.
pub fn build_raw_map(sequences: &[Vec<TokenId>], max_n: usize) -> Result<TokenMap> {
    if max_n < 1 {
        return Err(Error::InvalidConfig("max_n must be at least 1".into()));
    }
    if sequences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<&[TokenId], HashMap<&[TokenId], u64>> = HashMap::new();
    for seq in sequences {
        for p in 1..seq.len() {
            let suffix = &seq[p..];
            for n in 1..=max_n.min(p) {
                let key = &seq[p - n..p];
                // keys are contiguous, so the newest token rules out all longer ones
                if is_reserved(key[0]) {
                    break;
                }
                *counts.entry(key).or_default().entry(suffix).or_insert(0) += 1;
            }
        }
    }
    let entries = counts
        .into_iter()
        .map(|(key, conts)| {
            let mut cands: Vec<Candidate> = conts
                .into_iter()
                .map(|(c, f)| Candidate::new(c.to_vec(), f))
                .collect();
            cands.sort_by(rank_order);
            (key.to_vec(), cands)
        })
        .collect();
    Ok(TokenMap::from_parts(max_n, entries, None, None))
}
