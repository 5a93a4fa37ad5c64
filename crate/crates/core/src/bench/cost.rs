use serde::{Deserialize, Serialize};

use crate::engine::{DecodeTrace, StepRecord};
use crate::error::{Error, Result};

/// Simulated decode time, in units of one batch-1 forward pass.
///
/// A pass over `b` positions costs `base_latency + per_token_latency * (b - 1)`;
/// every candidate verified in a step beyond the first adds
/// `candidate_overhead`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub base_latency: f64,
    pub per_token_latency: f64,
    pub candidate_overhead: f64,
}

/// Named presets accepted by [`CostModel::preset`].
pub const PRESETS: [&str; 2] = ["paper-fit", "forward-passes"];

impl CostModel {
    pub fn new(base_latency: f64, per_token_latency: f64, candidate_overhead: f64) -> Result<Self> {
        let model = Self {
            base_latency,
            per_token_latency,
            candidate_overhead,
        };
        model.validate()?;
        Ok(model)
    }

    /// Every forward pass costs 1 regardless of batch size.
    pub fn forward_passes() -> Self {
        Self {
            base_latency: 1.0,
            per_token_latency: 0.0,
            candidate_overhead: 0.0,
        }
    }

    /// Constants fitted by [`fit_crossovers`] so that two candidates break
    /// even with AR decoding at 9 tokens and three candidates at 16.
    pub fn paper_fit() -> Self {
        Self {
            base_latency: 1.0,
            per_token_latency: 0.0,
            candidate_overhead: 7.33,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-fit" => Ok(Self::paper_fit()),
            "forward-passes" => Ok(Self::forward_passes()),
            other => Err(Error::InvalidConfig(format!(
                "unknown cost preset {other:?} (expected one of {PRESETS:?})"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.base_latency,
            self.per_token_latency,
            self.candidate_overhead,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "cost model constants must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn pass_cost(&self, batch_size: usize) -> f64 {
        self.base_latency + self.per_token_latency * batch_size.saturating_sub(1) as f64
    }

    pub fn step_cost(&self, step: &StepRecord) -> f64 {
        self.pass_cost(step.batch_size) + self.candidate_overhead * step.extra_candidates() as f64
    }

    pub fn trace_cost(&self, trace: &DecodeTrace) -> f64 {
        trace.steps().iter().map(|s| self.step_cost(s)).sum()
    }

    /// One verification step with `k` drafts of `len` tokens each.
    pub fn speculative_time(&self, k: usize, len: usize) -> f64 {
        self.pass_cost(k * len + 1) + self.candidate_overhead * k.saturating_sub(1) as f64
    }

    /// `len` sequential batch-1 passes.
    pub fn autoregressive_time(&self, len: usize) -> f64 {
        self.pass_cost(1) * len as f64
    }

    /// Smallest draft length in `lengths` at which verifying `k` drafts is no
    /// slower than decoding the same number of tokens autoregressively.
    pub fn crossover(&self, k: usize, lengths: impl IntoIterator<Item = usize>) -> Option<usize> {
        lengths
            .into_iter()
            .find(|&len| self.speculative_time(k, len) <= self.autoregressive_time(len))
    }
}

/// Grid search (base latency fixed at 1) for the cost model whose crossovers
/// over `1..=max_len` equal `targets` `(k, length)`; among all matching grid
/// points it returns the one with the largest worst-case slack.
pub fn fit_crossovers(
    targets: &[(usize, usize)],
    per_token_grid: impl Iterator<Item = f64> + Clone,
    overhead_grid: impl Iterator<Item = f64> + Clone,
    max_len: usize,
) -> Option<CostModel> {
    let mut best: Option<(f64, CostModel)> = None;
    for per_token in per_token_grid {
        for overhead in overhead_grid.clone() {
            let model = CostModel {
                base_latency: 1.0,
                per_token_latency: per_token,
                candidate_overhead: overhead,
            };
            let fits = targets
                .iter()
                .all(|&(k, len)| model.crossover(k, 1..=max_len) == Some(len));
            if !fits {
                continue;
            }
            let slack = targets
                .iter()
                .map(|&(k, len)| {
                    let at = model.autoregressive_time(len) - model.speculative_time(k, len);
                    let before =
                        model.speculative_time(k, len - 1) - model.autoregressive_time(len - 1);
                    at.min(before)
                })
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(s, _)| slack > *s) {
                best = Some((slack, model));
            }
        }
    }
    best.map(|(_, m)| m)
}
