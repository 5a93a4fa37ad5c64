use std::fmt::Write as _;

use serde::Serialize;

use super::CostModel;
use crate::engine::{DecodeTrace, StepRecord};
use crate::error::{Error, Result};

/// Which proposed tokens count towards the acceptance-rate denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArDenominator {
    /// Every draft token verified in a step, losing candidates included.
    #[default]
    AllCandidates,
    /// Only the winning candidate's draft tokens.
    WinningCandidate,
}

impl ArDenominator {
    fn proposed(self, step: &StepRecord) -> usize {
        match self {
            ArDenominator::AllCandidates => step.proposed,
            ArDenominator::WinningCandidate => step.winner_proposed,
        }
    }

    fn trace_proposed(self, trace: &DecodeTrace) -> usize {
        trace.draft_steps().map(|s| self.proposed(s)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub utterances: usize,
    /// `t_baseline / t_speculative`.
    pub speedup: f64,
    /// Accepted over proposed draft tokens, in percent.
    pub acceptance_rate: f64,
    /// Accepted draft tokens per decoded sequence.
    pub avg_acceptance_length: f64,
    /// Set when no draft was ever proposed; `acceptance_rate` is then 0.
    pub no_drafts: bool,
    pub ar_denominator: ArDenominator,
    pub t_baseline: f64,
    pub t_speculative: f64,
    pub forward_passes_baseline: usize,
    pub forward_passes_speculative: usize,
    pub draft_steps: usize,
    pub proposed: usize,
    pub accepted: usize,
    pub outputs_match: bool,
    pub cost_model: CostModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms_baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms_speculative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtteranceRow {
    pub utterance: usize,
    pub tokens: usize,
    pub forward_passes_baseline: usize,
    pub forward_passes_speculative: usize,
    pub t_baseline: f64,
    pub t_speculative: f64,
    pub speedup: f64,
    pub proposed: usize,
    pub accepted: usize,
    pub outputs_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub summary: Summary,
    pub rows: Vec<UtteranceRow>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Speedup, acceptance rate and average acceptance length of speculative
/// decodes `sd` against baseline decodes `ar` of the same utterances.
pub fn compute_metrics(
    sd: &[DecodeTrace],
    ar: &[DecodeTrace],
    cost: &CostModel,
    denominator: ArDenominator,
) -> Result<BenchReport> {
    if sd.len() != ar.len() {
        return Err(Error::LengthMismatch {
            speculative: sd.len(),
            baseline: ar.len(),
        });
    }
    if sd.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let rows: Vec<UtteranceRow> = sd
        .iter()
        .zip(ar)
        .enumerate()
        .map(|(i, (s, a))| {
            let t_baseline = cost.trace_cost(a);
            let t_speculative = cost.trace_cost(s);
            UtteranceRow {
                utterance: i,
                tokens: s.generated_len(),
                forward_passes_baseline: a.forward_passes(),
                forward_passes_speculative: s.forward_passes(),
                t_baseline,
                t_speculative,
                speedup: ratio(t_baseline, t_speculative),
                proposed: denominator.trace_proposed(s),
                accepted: s.accepted(),
                outputs_match: s.generated() == a.generated(),
            }
        })
        .collect();

    let t_baseline: f64 = rows.iter().map(|r| r.t_baseline).sum();
    let t_speculative: f64 = rows.iter().map(|r| r.t_speculative).sum();
    let proposed: usize = rows.iter().map(|r| r.proposed).sum();
    let accepted: usize = rows.iter().map(|r| r.accepted).sum();
    let no_drafts = proposed == 0;
    let summary = Summary {
        utterances: rows.len(),
        speedup: ratio(t_baseline, t_speculative),
        acceptance_rate: if no_drafts {
            0.0
        } else {
            100.0 * accepted as f64 / proposed as f64
        },
        avg_acceptance_length: accepted as f64 / rows.len() as f64,
        no_drafts,
        ar_denominator: denominator,
        t_baseline,
        t_speculative,
        forward_passes_baseline: rows.iter().map(|r| r.forward_passes_baseline).sum(),
        forward_passes_speculative: rows.iter().map(|r| r.forward_passes_speculative).sum(),
        draft_steps: sd.iter().map(|t| t.draft_steps().count()).sum(),
        proposed,
        accepted,
        outputs_match: rows.iter().all(|r| r.outputs_match),
        cost_model: *cost,
        wall_ms_baseline: None,
        wall_ms_speculative: None,
    };
    Ok(BenchReport { summary, rows })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per utterance followed by a `summary` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "utterance,tokens,passes_baseline,passes_speculative,t_baseline,t_speculative,S,proposed,accepted,A_r,A_l\n",
        );
        for r in &self.rows {
            let ar = if r.proposed == 0 {
                0.0
            } else {
                100.0 * r.accepted as f64 / r.proposed as f64
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6},{},{},{:.6},{:.6}",
                r.utterance,
                r.tokens,
                r.forward_passes_baseline,
                r.forward_passes_speculative,
                r.t_baseline,
                r.t_speculative,
                r.speedup,
                r.proposed,
                r.accepted,
                ar,
                r.accepted as f64
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "summary,{},{},{},{:.6},{:.6},{:.6},{},{},{:.6},{:.6}",
            self.rows.iter().map(|r| r.tokens).sum::<usize>(),
            s.forward_passes_baseline,
            s.forward_passes_speculative,
            s.t_baseline,
            s.t_speculative,
            s.speedup,
            s.proposed,
            s.accepted,
            s.acceptance_rate,
            s.avg_acceptance_length
        );
        out
    }
}
