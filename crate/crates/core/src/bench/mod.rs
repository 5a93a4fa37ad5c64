//! Benchmark harness: decode-cost model, the speedup / acceptance metrics,
//! and the candidate-count and n-gram-order sweeps.
//!
//! Test utterances are decoded from `[SOT]` by a [`TranscriptLm`] that
//! follows the utterance and defers to the corpus model elsewhere, optionally
//! perturbed by [`NoisyLm`]. Each utterance is decoded twice, plainly and
//! speculatively, and the two traces feed [`compute_metrics`].

mod cost;
mod metrics;
mod sweep;

use std::time::Instant;

use rayon::prelude::*;

use crate::corpus::{TokenSeq, SOT};
use crate::engine::{check_vocab, speculative_decode, DecodeTrace, EngineConfig};
use crate::error::{Error, Result};
use crate::model::{autoregressive_decode, MainModel, NoisyLm, TranscriptLm};
use crate::token_map::TokenMap;

pub use cost::{fit_crossovers, CostModel, PRESETS};
pub use metrics::{compute_metrics, ArDenominator, BenchReport, Summary, UtteranceRow};
pub use sweep::{
    sweep_candidates_vs_length, sweep_csv, sweep_ngram_order, CandidateSweep, SweepRow, MAX_SWEEP_N,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub engine: EngineConfig,
    /// Deviation rate of the main model, in `[0, 1]`.
    pub noise: f64,
    pub seed: u64,
    pub ar_denominator: ArDenominator,
    /// Also measure real elapsed time (not reproducible).
    pub wall_clock: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            noise: 0.0,
            seed: 0,
            ar_denominator: ArDenominator::default(),
            wall_clock: false,
        }
    }
}

/// Speculative and baseline traces, index-aligned with the utterances.
#[derive(Debug, Clone)]
pub struct Decodes {
    pub speculative: Vec<DecodeTrace>,
    pub baseline: Vec<DecodeTrace>,
    pub wall_ms: Option<(f64, f64)>,
}

/// Noise seed of one utterance, so deviations differ between utterances
/// that share a prefix.
pub fn utterance_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Decodes every utterance with and without the map.
pub fn run_decodes<M: MainModel + Sync>(
    base: &M,
    utterances: &[TokenSeq],
    map: &TokenMap,
    options: &BenchOptions,
) -> Result<Decodes> {
    if utterances.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(0.0..=1.0).contains(&options.noise) {
        return Err(Error::InvalidConfig("noise must lie in [0, 1]".into()));
    }
    options.engine.validate()?;
    check_vocab(base, map)?;

    let results: Vec<(DecodeTrace, DecodeTrace, f64, f64)> = utterances
        .par_iter()
        .enumerate()
        .map(|(index, utt)| {
            let model = NoisyLm::new(
                TranscriptLm::new(utt.clone(), base),
                options.noise,
                utterance_seed(options.seed, index),
            );
            let started = Instant::now();
            let (_, ar) = autoregressive_decode(&model, &[SOT], options.engine.max_output_len);
            let ar_ms = started.elapsed().as_secs_f64() * 1e3;
            let started = Instant::now();
            let (_, sd) =
                speculative_decode(&model, map, &[SOT], &options.engine).map_err(|e| {
                    Error::Item {
                        index,
                        source: Box::new(e),
                    }
                })?;
            let sd_ms = started.elapsed().as_secs_f64() * 1e3;
            Ok((sd, ar, ar_ms, sd_ms))
        })
        .collect::<Result<_>>()?;

    let wall_ms = options.wall_clock.then(|| {
        results
            .iter()
            .fold((0.0, 0.0), |(a, s), r| (a + r.2, s + r.3))
    });
    let (speculative, baseline) = results.into_iter().map(|(s, a, _, _)| (s, a)).unzip();
    Ok(Decodes {
        speculative,
        baseline,
        wall_ms,
    })
}

pub fn run_bench<M: MainModel + Sync>(
    base: &M,
    utterances: &[TokenSeq],
    map: &TokenMap,
    cost: &CostModel,
    options: &BenchOptions,
) -> Result<BenchReport> {
    let decodes = run_decodes(base, utterances, map, options)?;
    let mut report = compute_metrics(
        &decodes.speculative,
        &decodes.baseline,
        cost,
        options.ar_denominator,
    )?;
    if let Some((ar, sd)) = decodes.wall_ms {
        report.summary.wall_ms_baseline = Some(ar);
        report.summary.wall_ms_speculative = Some(sd);
    }
    Ok(report)
}
