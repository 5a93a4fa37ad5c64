use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{rank_order, Candidate, TokenMap};
use crate::error::{Error, Result};

/// Limits on how many candidates a key may keep and how long they must be.
///
/// The defaults follow the measured verification crossover: two candidates
/// only pay off from 9 tokens on, three from 16 tokens on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub max_candidates: usize,
    /// Candidate count -> minimum continuation length over the key's set.
    pub min_len_by_count: BTreeMap<usize, usize>,
    pub min_frequency: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            max_candidates: 3,
            min_len_by_count: BTreeMap::from([(1, 1), (2, 9), (3, 16)]),
            min_frequency: 1,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_candidates < 1 {
            return Err(Error::InvalidConfig(
                "max_candidates must be at least 1".into(),
            ));
        }
        if self.min_frequency < 1 {
            return Err(Error::InvalidConfig(
                "min_frequency must be at least 1".into(),
            ));
        }
        let mut prev = 0;
        for count in 1..=self.max_candidates {
            let Some(&len) = self.min_len_by_count.get(&count) else {
                return Err(Error::InvalidConfig(format!(
                    "no minimum length for {count} candidates"
                )));
            };
            if len < prev {
                return Err(Error::InvalidConfig(
                    "minimum lengths must be non-decreasing in candidate count".into(),
                ));
            }
            prev = len;
        }
        Ok(())
    }

    pub fn min_len_for(&self, count: usize) -> usize {
        self.min_len_by_count.get(&count).copied().unwrap_or(0)
    }

    fn satisfied_by(&self, cands: &[Candidate]) -> bool {
        let shortest = cands.iter().map(Candidate::len).min().unwrap_or(0);
        shortest >= self.min_len_for(cands.len())
    }
}

fn common_prefix_len(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Merges two candidates of one key into their longest common prefix with
/// the summed frequency.
pub fn merge_candidates(a: &Candidate, b: &Candidate) -> Result<Candidate> {
    let lcp = common_prefix_len(&a.continuation, &b.continuation);
    if lcp == 0 {
        return Err(Error::EmptyMerge);
    }
    Ok(Candidate::new(
        a.continuation[..lcp].to_vec(),
        a.frequency + b.frequency,
    ))
}

/// Inserts `cand` keeping rank order; an equal continuation absorbs it.
fn insert_ranked(cands: &mut Vec<Candidate>, cand: Candidate) {
    if let Some(existing) = cands
        .iter_mut()
        .find(|c| c.continuation == cand.continuation)
    {
        existing.frequency += cand.frequency;
        cands.sort_by(rank_order);
        return;
    }
    let pos = cands
        .binary_search_by(|c| rank_order(c, &cand))
        .unwrap_or_else(|p| p);
    cands.insert(pos, cand);
}

/// Pair with the longest common prefix; earlier-ranked pairs win ties.
fn nearest_pair(cands: &[Candidate]) -> (usize, usize, usize) {
    let mut best = (0, 0, 1);
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let lcp = common_prefix_len(&cands[i].continuation, &cands[j].continuation);
            if lcp > best.0 {
                best = (lcp, i, j);
            }
        }
    }
    best
}

fn prune_candidates(raw: &[Candidate], config: &PruneConfig) -> Vec<Candidate> {
    let mut cands: Vec<Candidate> = raw
        .iter()
        .filter(|c| c.frequency >= config.min_frequency)
        .cloned()
        .collect();
    cands.sort_by(rank_order);
    cands.truncate(config.max_candidates);

    while !cands.is_empty() && !config.satisfied_by(&cands) {
        if cands.len() == 1 {
            cands.clear();
            break;
        }
        let (lcp, i, j) = nearest_pair(&cands);
        if lcp == 0 {
            // nothing mergeable: drop the lowest-ranked candidate
            cands.pop();
            continue;
        }
        let merged = merge_candidates(&cands[i], &cands[j]).expect("non-empty prefix");
        cands.remove(j);
        cands.remove(i);
        insert_ranked(&mut cands, merged);
    }
    cands
}

/// Applies frequency filtering, ranking, truncation and merging to every key
/// of `map`; keys left without candidates are removed.
pub fn prune(map: &TokenMap, config: &PruneConfig) -> Result<TokenMap> {
    config.validate()?;
    let entries = map
        .entries
        .iter()
        .filter_map(|(key, raw)| {
            let kept = prune_candidates(raw, config);
            (!kept.is_empty()).then(|| (key.clone(), kept))
        })
        .collect();
    Ok(TokenMap::from_parts(
        map.max_n,
        entries,
        Some(config.clone()),
        map.vocab.clone(),
    ))
}
