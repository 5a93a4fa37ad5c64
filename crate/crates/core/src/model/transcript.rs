use super::MainModel;
use crate::corpus::{TokenId, SOT};

/// A model that "hears" one reference utterance.
///
/// While the context is `[SOT] ++ reference[..k]` it emits `reference[k]`,
/// the way an ASR decoder follows its acoustic input. Any other context is
/// answered by the fallback language model.
#[derive(Debug, Clone)]
pub struct TranscriptLm<M> {
    reference: Vec<TokenId>,
    fallback: M,
}

impl<M: MainModel> TranscriptLm<M> {
    /// `reference` is a tokenized sentence (trailing EOS, no SOT).
    pub fn new(reference: Vec<TokenId>, fallback: M) -> Self {
        Self {
            reference,
            fallback,
        }
    }

    pub fn reference(&self) -> &[TokenId] {
        &self.reference
    }
}

impl<M: MainModel> MainModel for TranscriptLm<M> {
    fn vocab_size(&self) -> usize {
        self.fallback.vocab_size()
    }

    fn greedy_next(&self, context: &[TokenId]) -> TokenId {
        if let Some((&SOT, heard)) = context.split_first() {
            if heard.len() < self.reference.len() && self.reference.starts_with(heard) {
                return self.reference[heard.len()];
            }
        }
        self.fallback.greedy_next(context)
    }
}
