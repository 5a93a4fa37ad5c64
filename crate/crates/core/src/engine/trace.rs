use serde::Serialize;

use crate::corpus::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// One batched verification of map-proposed drafts.
    Draft,
    /// One plain autoregressive forward pass.
    Ar,
}

/// What happened during one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub kind: StepKind,
    /// Number of candidate drafts verified (0 for AR steps).
    pub candidates: usize,
    /// Draft tokens verified, summed over all candidates.
    pub proposed: usize,
    /// Draft length of the winning candidate.
    pub winner_proposed: usize,
    /// Draft tokens of the winning candidate confirmed by the model.
    pub accepted: usize,
    pub candidate_index: Option<usize>,
    /// Positions evaluated by the forward pass: `proposed + 1` for drafts.
    pub batch_size: usize,
    /// Tokens appended to the output: accepted ones plus any correction,
    /// bonus or AR token.
    pub emitted: usize,
}

impl StepRecord {
    pub fn ar() -> Self {
        Self {
            kind: StepKind::Ar,
            candidates: 0,
            proposed: 0,
            winner_proposed: 0,
            accepted: 0,
            candidate_index: None,
            batch_size: 1,
            emitted: 1,
        }
    }

    pub fn draft(draft_lens: &[usize], winner: usize, accepted: usize, emitted: usize) -> Self {
        let proposed = draft_lens.iter().sum();
        Self {
            kind: StepKind::Draft,
            candidates: draft_lens.len(),
            proposed,
            winner_proposed: draft_lens[winner],
            accepted,
            candidate_index: Some(winner),
            batch_size: proposed + 1,
            emitted,
        }
    }

    /// Candidates verified beyond the first one.
    pub fn extra_candidates(&self) -> usize {
        self.candidates.saturating_sub(1)
    }
}

/// Per-decode record of every forward pass and the resulting sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeTrace {
    prompt_len: usize,
    steps: Vec<StepRecord>,
    output: Vec<TokenId>,
}

impl DecodeTrace {
    pub fn new(prompt: &[TokenId]) -> Self {
        Self {
            prompt_len: prompt.len(),
            steps: Vec::new(),
            output: prompt.to_vec(),
        }
    }

    /// Records one forward pass that appended `tokens` to the output.
    pub fn push_step(&mut self, step: StepRecord, tokens: &[TokenId]) {
        debug_assert_eq!(step.emitted, tokens.len());
        self.steps.push(step);
        self.output.extend_from_slice(tokens);
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn forward_passes(&self) -> usize {
        self.steps.len()
    }

    /// Prompt followed by every generated token.
    pub fn output(&self) -> &[TokenId] {
        &self.output
    }

    pub fn prompt(&self) -> &[TokenId] {
        &self.output[..self.prompt_len]
    }

    pub fn generated(&self) -> &[TokenId] {
        &self.output[self.prompt_len..]
    }

    pub fn generated_len(&self) -> usize {
        self.output.len() - self.prompt_len
    }

    pub fn draft_steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(|s| s.kind == StepKind::Draft)
    }

    pub fn proposed(&self) -> usize {
        self.draft_steps().map(|s| s.proposed).sum()
    }

    pub fn accepted(&self) -> usize {
        self.draft_steps().map(|s| s.accepted).sum()
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, s) in self.steps.iter().enumerate() {
            let ok = match s.kind {
                StepKind::Ar => {
                    s.batch_size == 1 && s.emitted == 1 && s.proposed == 0 && s.accepted == 0
                }
                StepKind::Draft => {
                    s.candidates >= 1
                        && s.accepted <= s.winner_proposed
                        && s.winner_proposed <= s.proposed
                        && s.batch_size == s.proposed + 1
                        && (s.emitted == s.accepted || s.emitted == s.accepted + 1)
                        && s.candidate_index.is_some_and(|c| c < s.candidates)
                }
            };
            if !ok {
                return Err(format!("step {i} is inconsistent: {s:?}"));
            }
        }
        let emitted: usize = self.steps.iter().map(|s| s.emitted).sum();
        if emitted != self.generated_len() {
            return Err(format!(
                "steps emitted {emitted} tokens but {} were generated",
                self.generated_len()
            ));
        }
        Ok(())
    }
}
