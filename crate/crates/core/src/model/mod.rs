//! The autoregressive main-model interface and table-driven stand-ins for a
//! neural decoder.

mod corpus_lm;
mod noisy;
mod transcript;

use crate::corpus::{TokenId, EOS};
use crate::engine::{DecodeTrace, StepRecord};

pub use corpus_lm::{CorpusLm, BACKOFF_FACTOR, DEFAULT_ORDER};
pub use noisy::NoisyLm;
pub use transcript::TranscriptLm;

/// A deterministic greedy next-token oracle.
///
/// `verify_draft(ctx, draft)[i]` must equal `greedy_next(ctx ++ draft[..i])`
/// for every `i` in `0..=draft.len()`. The provided implementation
/// satisfies this by construction; overrides must preserve it.
pub trait MainModel {
    fn vocab_size(&self) -> usize;

    fn greedy_next(&self, context: &[TokenId]) -> TokenId;

    fn verify_draft(&self, context: &[TokenId], draft: &[TokenId]) -> Vec<TokenId> {
        let mut ctx = Vec::with_capacity(context.len() + draft.len());
        ctx.extend_from_slice(context);
        let mut out = Vec::with_capacity(draft.len() + 1);
        for &tok in draft {
            out.push(self.greedy_next(&ctx));
            ctx.push(tok);
        }
        out.push(self.greedy_next(&ctx));
        out
    }
}

impl<M: MainModel + ?Sized> MainModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn greedy_next(&self, context: &[TokenId]) -> TokenId {
        (**self).greedy_next(context)
    }
    fn verify_draft(&self, context: &[TokenId], draft: &[TokenId]) -> Vec<TokenId> {
        (**self).verify_draft(context, draft)
    }
}

impl<M: MainModel + ?Sized> MainModel for Box<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn greedy_next(&self, context: &[TokenId]) -> TokenId {
        (**self).greedy_next(context)
    }
    fn verify_draft(&self, context: &[TokenId], draft: &[TokenId]) -> Vec<TokenId> {
        (**self).verify_draft(context, draft)
    }
}

/// Plain greedy decoding: one batch-1 forward pass per generated token until
/// EOS or `max_len` tokens. Returns the generated tokens (prompt excluded).
pub fn autoregressive_decode<M: MainModel + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    max_len: usize,
) -> (Vec<TokenId>, DecodeTrace) {
    let mut trace = DecodeTrace::new(prompt);
    while trace.generated_len() < max_len {
        let tok = model.greedy_next(trace.output());
        trace.push_step(StepRecord::ar(), &[tok]);
        if tok == EOS {
            break;
        }
    }
    (trace.generated().to_vec(), trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, SOT};

    #[test]
    fn ar_decode_finishes_sentence() {
        let corpus = ["a b c d e"];
        let vocab = build_vocab(&corpus).unwrap();
        let lm = CorpusLm::from_corpus(&corpus, &vocab, DEFAULT_ORDER);
        let a = vocab.id("a").unwrap();
        let (out, trace) = autoregressive_decode(&lm, &[SOT, a], 448);
        let expected: Vec<_> = ["b", "c", "d", "e"]
            .iter()
            .map(|w| vocab.id(w).unwrap())
            .chain([EOS])
            .collect();
        assert_eq!(out, expected);
        assert_eq!(trace.forward_passes(), 5);
        assert!(trace.steps().iter().all(|s| s.batch_size == 1));
        trace.check_invariants().unwrap();
    }

    #[test]
    fn ar_decode_respects_cap() {
        let corpus = ["a b c d e"];
        let vocab = build_vocab(&corpus).unwrap();
        let lm = CorpusLm::from_corpus(&corpus, &vocab, DEFAULT_ORDER);
        let (out, trace) = autoregressive_decode(&lm, &[SOT], 1);
        assert_eq!(out, vec![vocab.id("a").unwrap()]);
        assert_eq!(trace.forward_passes(), 1);
    }

    #[test]
    fn ar_decode_at_sentence_end_emits_eos() {
        let corpus = ["a b c"];
        let vocab = build_vocab(&corpus).unwrap();
        let lm = CorpusLm::from_corpus(&corpus, &vocab, DEFAULT_ORDER);
        let c = vocab.id("c").unwrap();
        let (out, _) = autoregressive_decode(&lm, &[SOT, c], 10);
        assert_eq!(out, vec![EOS]);
    }

    #[test]
    fn default_verify_matches_sequential_greedy() {
        let corpus = ["a b c", "a c b", "b b a c"];
        let vocab = build_vocab(&corpus).unwrap();
        let lm = CorpusLm::from_corpus(&corpus, &vocab, 3);
        let draft = [3, 4, 4, 5];
        let out = lm.verify_draft(&[SOT], &draft);
        assert_eq!(out.len(), draft.len() + 1);
        for i in 0..=draft.len() {
            let mut ctx = vec![SOT];
            ctx.extend_from_slice(&draft[..i]);
            assert_eq!(out[i], lm.greedy_next(&ctx));
        }
    }

    #[test]
    fn verify_matching_rollout_shifts_left() {
        let corpus = ["a b c d e", "a b x"];
        let vocab = build_vocab(&corpus).unwrap();
        let lm = CorpusLm::from_corpus(&corpus, &vocab, DEFAULT_ORDER);
        let prompt = [SOT, vocab.id("a").unwrap()];
        let (rollout, _) = autoregressive_decode(&lm, &prompt, 3);
        let out = lm.verify_draft(&prompt, &rollout);
        // position i predicts draft[i], so a greedy rollout verifies to itself
        // plus one fresh token
        assert_eq!(&out[..rollout.len()], &rollout[..]);
        let mut ctx = prompt.to_vec();
        ctx.extend_from_slice(&rollout);
        assert_eq!(out[rollout.len()], lm.greedy_next(&ctx));
        assert_eq!(lm.verify_draft(&prompt, &rollout[..1]).len(), 2);
    }
}
