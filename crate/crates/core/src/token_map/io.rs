//! Versioned JSON persistence for token maps.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{rank_order, Candidate, PruneConfig, TokenMap};
use crate::corpus::{is_reserved, TokenId, Vocab};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    version: u64,
    max_n: usize,
    prune_config: Option<PruneConfig>,
    vocab: Vec<String>,
    entry_count: usize,
    candidate_count: usize,
    entries: Vec<EntryRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    key: Vec<TokenId>,
    candidates: Vec<CandidateRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRecord {
    c: Vec<TokenId>,
    f: u64,
}

pub fn save_map(map: &TokenMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = to_json(map);
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<TokenMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_json(&bytes)
}

pub(crate) fn to_json(map: &TokenMap) -> Vec<u8> {
    let file = MapFile {
        version: SCHEMA_VERSION,
        max_n: map.max_n,
        prune_config: map.prune_config.clone(),
        vocab: map
            .vocab
            .as_ref()
            .map(|v| v.strings().to_vec())
            .unwrap_or_default(),
        entry_count: map.key_count(),
        candidate_count: map.candidate_count(),
        entries: map
            .entries
            .iter()
            .map(|(key, cands)| EntryRecord {
                key: key.clone(),
                candidates: cands
                    .iter()
                    .map(|c| CandidateRecord {
                        c: c.continuation.clone(),
                        f: c.frequency,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_vec(&file).expect("map serialization is infallible")
}

pub(crate) fn from_json(bytes: &[u8]) -> Result<TokenMap> {
    let corrupt = |msg: String| Error::CorruptMap(msg);
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing version field".into()))?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersionMismatch {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    let file: MapFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;

    if file.entries.len() != file.entry_count {
        return Err(corrupt(format!(
            "header declares {} entries, found {}",
            file.entry_count,
            file.entries.len()
        )));
    }
    let found: usize = file.entries.iter().map(|e| e.candidates.len()).sum();
    if found != file.candidate_count {
        return Err(corrupt(format!(
            "header declares {} candidates, found {found}",
            file.candidate_count
        )));
    }
    if file.max_n < 1 {
        return Err(corrupt("max_n must be at least 1".into()));
    }
    if let Some(cfg) = &file.prune_config {
        cfg.validate().map_err(|e| corrupt(e.to_string()))?;
    }
    let vocab = if file.vocab.is_empty() {
        None
    } else {
        Some(Vocab::from_strings(file.vocab)?)
    };
    let in_vocab = |t: TokenId| vocab.as_ref().is_none_or(|v| (t as usize) < v.len());

    let mut entries = BTreeMap::new();
    for rec in file.entries {
        if rec.key.is_empty() || rec.key.len() > file.max_n {
            return Err(corrupt(format!("key {:?} has invalid length", rec.key)));
        }
        if rec.key.iter().any(|&t| is_reserved(t) || !in_vocab(t)) {
            return Err(corrupt(format!("key {:?} has invalid tokens", rec.key)));
        }
        let cands: Vec<Candidate> = rec
            .candidates
            .into_iter()
            .map(|c| Candidate::new(c.c, c.f))
            .collect();
        if cands.is_empty()
            || cands.iter().any(|c| {
                c.is_empty() || c.frequency == 0 || !c.continuation.iter().all(|&t| in_vocab(t))
            })
        {
            return Err(corrupt(format!("key {:?} has invalid candidates", rec.key)));
        }
        if cands
            .windows(2)
            .any(|w| rank_order(&w[0], &w[1]) != std::cmp::Ordering::Less)
        {
            return Err(corrupt(format!(
                "key {:?} candidates out of order",
                rec.key
            )));
        }
        if entries.insert(rec.key.clone(), cands).is_some() {
            return Err(corrupt(format!("duplicate key {:?}", rec.key)));
        }
    }
    Ok(TokenMap::from_parts(
        file.max_n,
        entries,
        file.prune_config,
        vocab,
    ))
}
