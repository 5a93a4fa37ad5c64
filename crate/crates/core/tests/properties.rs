mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokenmap_sd::bench::{compute_metrics, run_bench, ArDenominator, BenchOptions, CostModel};
use tokenmap_sd::corpus::{build_vocab, detokenize, tokenize, tokenize_all};
use tokenmap_sd::synthetic::{maintenance_corpus, random_corpus};
use tokenmap_sd::{
    autoregressive_decode, build_raw_map, prune, speculative_decode, CorpusLm, EngineConfig,
    NoisyLm, EOS, SOT,
};

use common::{enumerate_ngrams, map_as_counts, random_prune_config};

fn corpus(seed: u64, sentences: usize, structured: bool) -> Vec<String> {
    if structured {
        maintenance_corpus(sentences, seed)
    } else {
        random_corpus(sentences, 12, 1..=8, seed)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn speculative_matches_autoregressive(
        seed in any::<u64>(),
        sentences in 1usize..60,
        structured in any::<bool>(),
        max_n in 1usize..5,
        order in 1usize..5,
        noise in 0.0f64..0.5,
        max_len in 1usize..80,
        cut in 0usize..6,
    ) {
        let text = corpus(seed, sentences, structured);
        let vocab = build_vocab(&text).unwrap();
        let seqs = tokenize_all(&text, &vocab);
        let config = random_prune_config(&mut ChaCha8Rng::seed_from_u64(seed));
        let map = prune(&build_raw_map(&seqs, max_n).unwrap(), &config).unwrap();
        let lm = CorpusLm::from_sequences(&seqs, vocab.len(), order);
        let model = NoisyLm::new(&lm, noise, seed);
        let mut prompt = vec![SOT];
        prompt.extend(seqs[0].iter().take(cut).copied().filter(|&t| t != EOS));
        let engine = EngineConfig { max_output_len: max_len, ..EngineConfig::default() };
        let (sd, trace) = speculative_decode(&model, &map, &prompt, &engine).unwrap();
        let (ar, ar_trace) = autoregressive_decode(&model, &prompt, max_len);
        prop_assert_eq!(&sd, &ar);
        prop_assert!(trace.check_invariants().is_ok());
        prop_assert!(trace.forward_passes() <= ar_trace.forward_passes());
    }

    #[test]
    fn raw_map_is_complete(seed in any::<u64>(), sentences in 1usize..30, max_n in 1usize..6, structured in any::<bool>()) {
        let text = corpus(seed, sentences, structured);
        let vocab = build_vocab(&text).unwrap();
        let seqs = tokenize_all(&text, &vocab);
        let map = build_raw_map(&seqs, max_n).unwrap();
        prop_assert_eq!(map_as_counts(&map), enumerate_ngrams(&seqs, max_n));
    }

    #[test]
    fn pruned_candidates_are_prefixes_of_raw_ones(seed in any::<u64>(), sentences in 1usize..40, max_n in 1usize..4) {
        let text = corpus(seed, sentences, true);
        let vocab = build_vocab(&text).unwrap();
        let seqs = tokenize_all(&text, &vocab);
        let raw = build_raw_map(&seqs, max_n).unwrap();
        let config = random_prune_config(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let pruned = prune(&raw, &config).unwrap();
        for (key, cands) in pruned.entries() {
            prop_assert!(!cands.is_empty() && cands.len() <= config.max_candidates);
            let shortest = cands.iter().map(|c| c.len()).min().unwrap();
            prop_assert!(shortest >= config.min_len_for(cands.len()) || cands.len() == 1);
            let originals = raw.get(key).expect("pruned keys come from the raw map");
            for c in cands {
                prop_assert!(!c.continuation.is_empty());
                prop_assert!(originals.iter().any(|o| o.continuation.starts_with(&c.continuation)));
            }
        }
    }

    #[test]
    fn higher_min_frequency_never_adds_keys(seed in any::<u64>(), sentences in 1usize..60, low in 1u64..4, extra in 0u64..4) {
        let text = corpus(seed, sentences, true);
        let vocab = build_vocab(&text).unwrap();
        let seqs = tokenize_all(&text, &vocab);
        let raw = build_raw_map(&seqs, 3).unwrap();
        let mut config = tokenmap_sd::PruneConfig { min_frequency: low, ..Default::default() };
        let loose = prune(&raw, &config).unwrap();
        config.min_frequency = low + extra;
        let strict = prune(&raw, &config).unwrap();
        prop_assert!(strict.key_count() <= loose.key_count());
        for (key, _) in strict.entries() {
            prop_assert!(loose.get(key).is_some());
        }
    }

    #[test]
    fn builds_are_deterministic(seed in any::<u64>(), sentences in 1usize..40) {
        let text = corpus(seed, sentences, true);
        let vocab = build_vocab(&text).unwrap();
        let seqs = tokenize_all(&text, &vocab);
        let a = prune(&build_raw_map(&seqs, 3).unwrap(), &Default::default()).unwrap();
        let b = prune(&build_raw_map(&seqs, 3).unwrap(), &Default::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tokenize_round_trips(words in prop::collection::vec("[a-z]{1,6}", 1..12)) {
        let sentence = words.join(" ");
        let vocab = build_vocab(&[sentence.as_str()]).unwrap();
        let tokens = tokenize(&sentence, &vocab);
        prop_assert_eq!(tokens.last(), Some(&EOS));
        prop_assert_eq!(detokenize(&tokens, &vocab), sentence);
    }

    #[test]
    fn unit_cost_speedup_is_pass_ratio(seed in any::<u64>(), sentences in 2usize..40, noise in 0.0f64..0.3) {
        let text = corpus(seed, sentences, true);
        let vocab = build_vocab(&text).unwrap();
        let seqs = tokenize_all(&text, &vocab);
        let lm = CorpusLm::from_sequences(&seqs, vocab.len(), 4);
        let map = prune(&build_raw_map(&seqs, 3).unwrap(), &Default::default()).unwrap();
        let options = BenchOptions { noise, seed, ..BenchOptions::default() };
        let report = run_bench(&lm, &seqs, &map, &CostModel::forward_passes(), &options).unwrap();
        let s = &report.summary;
        prop_assert_eq!(
            s.speedup,
            s.forward_passes_baseline as f64 / s.forward_passes_speculative as f64
        );
        prop_assert!(s.outputs_match);
        let again = run_bench(&lm, &seqs, &map, &CostModel::forward_passes(), &options).unwrap();
        prop_assert_eq!(report.to_json(), again.to_json());
        prop_assert_eq!(report.to_csv(), again.to_csv());
    }
}

#[test]
fn empty_map_reports_no_speedup() {
    let text = maintenance_corpus(50, 4);
    let vocab = build_vocab(&text).unwrap();
    let seqs = tokenize_all(&text, &vocab);
    let lm = CorpusLm::from_sequences(&seqs, vocab.len(), 4);
    let map = tokenmap_sd::TokenMap::empty(3).unwrap();
    let options = BenchOptions::default();
    let decodes = tokenmap_sd::bench::run_decodes(&lm, &seqs, &map, &options).unwrap();
    let report = compute_metrics(
        &decodes.speculative,
        &decodes.baseline,
        &CostModel::paper_fit(),
        ArDenominator::default(),
    )
    .unwrap();
    assert!(report.summary.speedup <= 1.0);
    assert!(report.summary.no_drafts);
    assert_eq!(report.summary.acceptance_rate, 0.0);
}
