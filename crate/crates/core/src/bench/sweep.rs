use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use super::{run_bench, BenchOptions, CostModel};
use crate::corpus::TokenSeq;
use crate::error::{Error, Result};
use crate::model::MainModel;
use crate::token_map::{build_raw_map, prune, PruneConfig, TokenMap};
use crate::Vocab;

pub const MAX_SWEEP_N: usize = 8;

/// One line of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: usize,
    pub speedup: f64,
    pub acceptance_rate: f64,
    pub avg_acceptance_length: f64,
    pub crossover: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSweep {
    pub rows: Vec<SweepRow>,
    /// `(k, crossover length)` per candidate count.
    pub crossovers: Vec<(usize, Option<usize>)>,
}

fn check_range(name: &str, range: &RangeInclusive<usize>, min: usize, max: usize) -> Result<()> {
    if range.is_empty() || *range.start() < min || *range.end() > max {
        return Err(Error::InvalidConfig(format!(
            "{name} range {}..{} must be non-empty and within {min}..{max}",
            range.start(),
            range.end()
        )));
    }
    Ok(())
}

/// Simulated time of verifying `k` fully accepted drafts of length `len`
/// against decoding `len` tokens autoregressively, for every grid point.
pub fn sweep_candidates_vs_length(
    cost: &CostModel,
    ks: RangeInclusive<usize>,
    lengths: RangeInclusive<usize>,
) -> Result<CandidateSweep> {
    check_range("candidate", &ks, 1, usize::MAX)?;
    check_range("length", &lengths, 1, usize::MAX)?;
    let mut rows = Vec::new();
    let mut crossovers = Vec::new();
    for k in ks {
        let crossover = cost.crossover(k, lengths.clone());
        crossovers.push((k, crossover));
        for len in lengths.clone() {
            rows.push(SweepRow {
                param: format!("k{k}"),
                value: len,
                speedup: cost.autoregressive_time(len) / cost.speculative_time(k, len),
                acceptance_rate: 100.0,
                avg_acceptance_length: len as f64,
                crossover,
            });
        }
    }
    Ok(CandidateSweep { rows, crossovers })
}

/// Builds one map per n-gram order and benchmarks it on `utterances`.
#[allow(clippy::too_many_arguments)]
pub fn sweep_ngram_order<M: MainModel + Sync>(
    train: &[TokenSeq],
    vocab: &Vocab,
    model: &M,
    utterances: &[TokenSeq],
    cost: &CostModel,
    orders: RangeInclusive<usize>,
    prune_config: &PruneConfig,
    options: &BenchOptions,
) -> Result<Vec<SweepRow>> {
    check_range("n-gram order", &orders, 1, MAX_SWEEP_N)?;
    prune_config.validate()?;
    orders
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let map: TokenMap =
                prune(&build_raw_map(train, n)?, prune_config)?.with_vocab(vocab.clone());
            let report = run_bench(model, utterances, &map, cost, options)?;
            Ok(SweepRow {
                param: "n".into(),
                value: n,
                speedup: report.summary.speedup,
                acceptance_rate: report.summary.acceptance_rate,
                avg_acceptance_length: report.summary.avg_acceptance_length,
                crossover: None,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,S,A_r,A_l,crossover\n");
    for r in rows {
        let crossover = r.crossover.map_or_else(String::new, |c| c.to_string());
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{}",
            r.param, r.value, r.speedup, r.acceptance_rate, r.avg_acceptance_length, crossover
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, tokenize_all};
    use crate::model::CorpusLm;

    #[test]
    fn candidate_sweep_grid() {
        let sweep = sweep_candidates_vs_length(&CostModel::paper_fit(), 1..=4, 1..=32).unwrap();
        assert_eq!(sweep.rows.len(), 128);
        assert_eq!(
            sweep.crossovers,
            vec![(1, Some(1)), (2, Some(9)), (3, Some(16)), (4, Some(23))]
        );
    }

    #[test]
    fn reversed_ranges_rejected() {
        #[allow(clippy::reversed_empty_ranges)]
        let r = sweep_candidates_vs_length(&CostModel::paper_fit(), 3..=1, 1..=4);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn ngram_sweep_rows_and_csv() {
        let corpus = ["a b c d e", "a b c f g", "b c d e a"];
        let vocab = build_vocab(&corpus).unwrap();
        let seqs = tokenize_all(&corpus, &vocab);
        let lm = CorpusLm::from_sequences(&seqs, vocab.len(), 4);
        let rows = sweep_ngram_order(
            &seqs,
            &vocab,
            &lm,
            &seqs,
            &CostModel::forward_passes(),
            1..=4,
            &PruneConfig::default(),
            &BenchOptions::default(),
        )
        .unwrap();
        assert_eq!(
            rows.iter().map(|r| r.value).collect::<Vec<_>>(),
            [1, 2, 3, 4]
        );
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("param,value,S,A_r,A_l,crossover\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(sweep_ngram_order(
            &seqs,
            &vocab,
            &lm,
            &seqs,
            &CostModel::forward_passes(),
            0..=2,
            &PruneConfig::default(),
            &BenchOptions::default(),
        )
        .is_err());
    }
}
