//! Speculative decoding driven by token-map drafts.
//!
//! Each iteration looks up the current context in the map. When the map has
//! candidates, every candidate is verified against the main model and the
//! one with the longest confirmed prefix wins: its confirmed tokens are kept
//! together with the model's own token at the first mismatch (or the bonus
//! token after a fully confirmed draft). When the map has nothing, the
//! engine falls back to plain autoregressive steps and tries again.
//!
//! Every emitted token is the model's greedy choice for its prefix, so the
//! output is identical to [`autoregressive_decode`](crate::model::autoregressive_decode).

mod trace;

use rayon::prelude::*;

use crate::corpus::{TokenId, EOS};
use crate::error::{Error, Result};
use crate::model::MainModel;
use crate::token_map::TokenMap;

pub use trace::{DecodeTrace, StepKind, StepRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_candidates_per_step: usize,
    pub max_draft_len: usize,
    pub max_output_len: usize,
    /// AR tokens generated after a map miss before looking up again.
    pub fallback_ar_steps: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_candidates_per_step: 3,
            max_draft_len: 64,
            max_output_len: 448,
            fallback_ar_steps: 1,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("max_candidates_per_step", self.max_candidates_per_step),
            ("max_draft_len", self.max_draft_len),
            ("max_output_len", self.max_output_len),
            ("fallback_ar_steps", self.fallback_ar_steps),
        ];
        for (name, value) in fields {
            if value < 1 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

pub fn check_vocab<M: MainModel + ?Sized>(model: &M, map: &TokenMap) -> Result<()> {
    match map.vocab() {
        Some(v) if v.len() != model.vocab_size() => Err(Error::VocabMismatch {
            map: v.len(),
            model: model.vocab_size(),
        }),
        _ => Ok(()),
    }
}

/// Drafts for the current context: at most `max_candidates_per_step`, each
/// cut after its first EOS and to the draft and output budgets.
fn drafts<'m>(
    map: &'m TokenMap,
    context: &[TokenId],
    config: &EngineConfig,
    remaining: usize,
) -> Vec<&'m [TokenId]> {
    // leave room for the correction/bonus token
    let budget = config.max_draft_len.min(remaining.saturating_sub(1));
    map.lookup(context)
        .iter()
        .take(config.max_candidates_per_step)
        .map(|c| {
            let cont = &c.continuation[..];
            let end = cont
                .iter()
                .position(|&t| t == EOS)
                .map_or(cont.len(), |p| p + 1);
            &cont[..end.min(budget)]
        })
        .filter(|d| !d.is_empty())
        .collect()
}

pub fn speculative_decode<M: MainModel + ?Sized>(
    model: &M,
    map: &TokenMap,
    prompt: &[TokenId],
    config: &EngineConfig,
) -> Result<(Vec<TokenId>, DecodeTrace)> {
    config.validate()?;
    check_vocab(model, map)?;

    let mut trace = DecodeTrace::new(prompt);
    'decode: while trace.generated_len() < config.max_output_len {
        let remaining = config.max_output_len - trace.generated_len();
        let candidates = drafts(map, trace.output(), config, remaining);

        if candidates.is_empty() {
            for _ in 0..config.fallback_ar_steps {
                if trace.generated_len() >= config.max_output_len {
                    break 'decode;
                }
                let tok = model.greedy_next(trace.output());
                trace.push_step(StepRecord::ar(), &[tok]);
                if tok == EOS {
                    break 'decode;
                }
            }
            continue;
        }

        // (accepted, candidate index, verification output)
        let mut best: Option<(usize, usize, Vec<TokenId>)> = None;
        for (idx, draft) in candidates.iter().enumerate() {
            let verified = model.verify_draft(trace.output(), draft);
            let accepted = draft
                .iter()
                .zip(&verified)
                .take_while(|(d, v)| d == v)
                .count();
            if best.as_ref().is_none_or(|(a, _, _)| accepted > *a) {
                best = Some((accepted, idx, verified));
            }
        }
        let (accepted, winner, verified) = best.expect("at least one candidate");
        let draft = candidates[winner];

        let mut emitted = draft[..accepted].to_vec();
        let finished = emitted.last() == Some(&EOS);
        if !finished {
            emitted.push(verified[accepted]);
        }
        let lens: Vec<usize> = candidates.iter().map(|d| d.len()).collect();
        trace.push_step(
            StepRecord::draft(&lens, winner, accepted, emitted.len()),
            &emitted,
        );
        if emitted.last() == Some(&EOS) {
            break;
        }
    }
    Ok((trace.generated().to_vec(), trace))
}

/// Decodes every prompt independently; results keep the input order.
pub fn batch_decode<M: MainModel + Sync + ?Sized>(
    model: &M,
    map: &TokenMap,
    prompts: &[Vec<TokenId>],
    config: &EngineConfig,
) -> Result<Vec<(Vec<TokenId>, DecodeTrace)>> {
    if prompts.is_empty() {
        return Err(Error::EmptyBatch);
    }
    prompts
        .par_iter()
        .enumerate()
        .map(|(index, prompt)| {
            speculative_decode(model, map, prompt, config).map_err(|e| Error::Item {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, tokenize_all, Vocab, SOT};
    use crate::model::{autoregressive_decode, CorpusLm, NoisyLm, DEFAULT_ORDER};
    use crate::token_map::{build_raw_map, prune, PruneConfig};

    fn setup(corpus: &[&str]) -> (Vocab, CorpusLm, TokenMap) {
        let vocab = build_vocab(corpus).unwrap();
        let seqs = tokenize_all(corpus, &vocab);
        let lm = CorpusLm::from_sequences(&seqs, vocab.len(), DEFAULT_ORDER);
        let map = prune(&build_raw_map(&seqs, 3).unwrap(), &PruneConfig::default())
            .unwrap()
            .with_vocab(vocab.clone());
        (vocab, lm, map)
    }

    #[test]
    fn single_sentence_one_draft_step() {
        let (vocab, lm, map) = setup(&["a b c d e"]);
        let prompt = [SOT, vocab.id("a").unwrap()];
        let (out, trace) =
            speculative_decode(&lm, &map, &prompt, &EngineConfig::default()).unwrap();
        let (ar_out, ar_trace) = autoregressive_decode(&lm, &prompt, 448);
        assert_eq!(out, ar_out);
        assert_eq!(trace.forward_passes(), 1);
        assert_eq!(ar_trace.forward_passes(), 5);
        let step = trace.steps()[0];
        assert_eq!(step.kind, StepKind::Draft);
        assert_eq!((step.proposed, step.accepted, step.batch_size), (5, 5, 6));
        trace.check_invariants().unwrap();
    }

    #[test]
    fn empty_map_is_pure_fallback() {
        let (vocab, lm, _) = setup(&["a b c d e", "b c a"]);
        let map = TokenMap::empty(3).unwrap().with_vocab(vocab);
        let (out, trace) = speculative_decode(&lm, &map, &[SOT], &EngineConfig::default()).unwrap();
        let (ar_out, ar_trace) = autoregressive_decode(&lm, &[SOT], 448);
        assert_eq!(out, ar_out);
        assert_eq!(trace.forward_passes(), ar_trace.forward_passes());
        assert!(trace.steps().iter().all(|s| s.kind == StepKind::Ar));
    }

    #[test]
    fn mismatch_appends_correction_and_resumes() {
        let corpus = ["a b c d e f g"];
        let (vocab, lm, map) = setup(&corpus);
        let prompt = [SOT, vocab.id("a").unwrap()];
        // find a seed whose noisy model deviates at exactly draft position 2
        let (seed, noisy) = (0..10_000u64)
            .map(|s| (s, NoisyLm::new(&lm, 0.3, s)))
            .find(|(_, m)| {
                let out = m.verify_draft(&prompt, map.lookup(&prompt)[0].continuation.as_slice());
                out[0] == vocab.id("b").unwrap()
                    && out[1] == vocab.id("c").unwrap()
                    && out[2] != vocab.id("d").unwrap()
            })
            .expect("a deviating seed exists");
        let (out, trace) =
            speculative_decode(&noisy, &map, &prompt, &EngineConfig::default()).unwrap();
        let first = trace.steps()[0];
        assert_eq!(first.accepted, 2, "seed {seed}");
        assert_eq!(first.emitted, 3);
        assert_eq!(out, autoregressive_decode(&noisy, &prompt, 448).0);
        trace.check_invariants().unwrap();
    }

    #[test]
    fn output_cap_is_respected() {
        let (vocab, lm, map) = setup(&["a b c d e f g h"]);
        let prompt = [SOT, vocab.id("a").unwrap()];
        for cap in 1..10 {
            let cfg = EngineConfig {
                max_output_len: cap,
                ..EngineConfig::default()
            };
            let (out, trace) = speculative_decode(&lm, &map, &prompt, &cfg).unwrap();
            assert_eq!(out, autoregressive_decode(&lm, &prompt, cap).0, "cap {cap}");
            trace.check_invariants().unwrap();
        }
    }

    #[test]
    fn draft_len_cap_splits_steps() {
        let (vocab, lm, map) = setup(&["a b c d e f g h"]);
        let prompt = [SOT, vocab.id("a").unwrap()];
        let cfg = EngineConfig {
            max_draft_len: 2,
            ..EngineConfig::default()
        };
        let (out, trace) = speculative_decode(&lm, &map, &prompt, &cfg).unwrap();
        assert_eq!(out, autoregressive_decode(&lm, &prompt, 448).0);
        assert!(trace.steps().iter().all(|s| s.winner_proposed <= 2));
        // 8 tokens at 3 per step
        assert_eq!(trace.forward_passes(), 3);
    }

    #[test]
    fn fallback_steps_config() {
        let (vocab, lm, _) = setup(&["a b c d e f"]);
        let map = TokenMap::empty(2).unwrap().with_vocab(vocab);
        let cfg = EngineConfig {
            fallback_ar_steps: 4,
            ..EngineConfig::default()
        };
        let (out, trace) = speculative_decode(&lm, &map, &[SOT], &cfg).unwrap();
        assert_eq!(out, autoregressive_decode(&lm, &[SOT], 448).0);
        assert_eq!(trace.forward_passes(), 7);
    }

    #[test]
    fn vocab_mismatch_is_reported() {
        let (_, lm, _) = setup(&["a b c"]);
        let other = build_vocab(&["x y z w"]).unwrap();
        let map = TokenMap::empty(3).unwrap().with_vocab(other);
        assert!(matches!(
            speculative_decode(&lm, &map, &[SOT], &EngineConfig::default()),
            Err(Error::VocabMismatch { map: 7, model: 6 })
        ));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (_, lm, map) = setup(&["a b c"]);
        let cfg = EngineConfig {
            max_draft_len: 0,
            ..EngineConfig::default()
        };
        assert!(matches!(
            speculative_decode(&lm, &map, &[SOT], &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn batch_matches_single_decodes() {
        let (vocab, lm, map) = setup(&["a b c d", "b c a d", "d a b c"]);
        let prompts = vec![
            vec![SOT, vocab.id("a").unwrap()],
            vec![SOT, vocab.id("d").unwrap()],
            vec![SOT, vocab.id("a").unwrap()],
        ];
        let cfg = EngineConfig::default();
        let results = batch_decode(&lm, &map, &prompts, &cfg).unwrap();
        assert_eq!(results.len(), 3);
        for (prompt, got) in prompts.iter().zip(&results) {
            assert_eq!(*got, speculative_decode(&lm, &map, prompt, &cfg).unwrap());
        }
        assert_eq!(results[0], results[2]);
        assert!(matches!(
            batch_decode(&lm, &map, &[], &cfg),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn batch_errors_carry_index() {
        let (_, lm, _) = setup(&["a b c"]);
        let map = TokenMap::empty(3)
            .unwrap()
            .with_vocab(build_vocab(&["q"]).unwrap());
        let err = batch_decode(&lm, &map, &[vec![SOT]], &EngineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Item { index: 0, .. }));
        assert!(matches!(err.root(), Error::VocabMismatch { .. }));
    }
}
