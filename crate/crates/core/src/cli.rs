//! Command-line driver: build maps, decode, benchmark and sweep.
//!
//! Exit codes: 0 success, 1 I/O or file-format failure, 2 invalid
//! configuration, 3 vocabulary mismatch between map and model.

use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{self, ArDenominator, BenchOptions, CostModel, SweepRow};
use crate::corpus::{self, detokenize, load_corpus, tokenize, tokenize_all, Vocab, EOS, SOT};
use crate::engine::{speculative_decode, EngineConfig};
use crate::error::Error;
use crate::model::{autoregressive_decode, CorpusLm, NoisyLm, DEFAULT_ORDER};
use crate::synthetic;
use crate::token_map::{self, build_raw_map, PruneConfig, TokenMap};

pub const THREADS_ENV: &str = "TOKENMAP_SD_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "tokenmap-sd",
    version,
    about = "Model-free speculative decoding with n-gram token maps"
)]
pub struct Cli {
    /// Seed for the noisy model and the demo corpus generator.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Suppress summaries on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and prune a token map from a corpus file.
    BuildMap(BuildMapArgs),
    /// Decode one prompt speculatively and print the continuation.
    Decode(DecodeArgs),
    /// Compare plain and speculative decoding over a test set.
    Bench(BenchArgs),
    /// Sweep n-gram order or candidate count and length.
    Sweep(SweepArgs),
    /// Write the synthetic maintenance-command corpus.
    DemoCorpus(DemoArgs),
}

#[derive(Debug, Args)]
pub struct BuildMapArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub max_n: usize,
    #[arg(long, default_value_t = 3)]
    pub max_candidates: usize,
    /// Minimum draft length when two candidates are kept.
    #[arg(long = "min-len-2", default_value_t = 9)]
    pub min_len_2: usize,
    /// Minimum draft length when three (or more) candidates are kept.
    #[arg(long = "min-len-3", default_value_t = 16)]
    pub min_len_3: usize,
    #[arg(long, default_value_t = 1)]
    pub min_freq: u64,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub model_corpus: PathBuf,
    #[arg(long)]
    pub prompt: String,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 448)]
    pub max_len: usize,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub lm_order: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub model_corpus: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// `paper-fit` or `forward-passes`.
    #[arg(long, default_value = "paper-fit")]
    pub cost_preset: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Denominator::All)]
    pub ar_denominator: Denominator,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub lm_order: usize,
    /// Also record real elapsed time (makes the report non-reproducible).
    #[arg(long)]
    pub wall_clock: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Denominator {
    /// All draft tokens verified, losing candidates included.
    All,
    /// Only the winning candidate's draft tokens.
    Winner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    Ngram,
    Candidates,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub mode: SweepMode,
    /// n-gram orders (ngram mode, default 1..6) or candidate counts
    /// (candidates mode, default 1..4), as `A..B`.
    #[arg(long)]
    pub range: Option<String>,
    /// Draft lengths for candidates mode.
    #[arg(long, default_value = "1..32")]
    pub lengths: String,
    /// Training corpus (ngram mode); the demo corpus is used when absent.
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub cost_preset: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub lm_order: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 1000)]
    pub sentences: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write this many held-out sentences to `--test-out`.
    #[arg(long, default_value_t = 0, requires = "test_out")]
    pub test_sentences: usize,
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

/// Demo split used when `sweep --mode ngram` gets no corpus files.
pub const DEMO_TRAIN: usize = 1000;
pub const DEMO_TEST: usize = 200;

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err.root() {
            Error::InvalidConfig(_) | Error::EmptyCorpus | Error::EmptyBatch => 2,
            Error::VocabMismatch { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: msg.into(),
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `A..B` (inclusive) or a single value.
pub fn parse_range(text: &str) -> Result<RangeInclusive<usize>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid range bound {s:?}"))
    };
    let range = match text.split_once("..") {
        Some((a, b)) => parse(a)?..=parse(b.trim_start_matches('='))?,
        None => {
            let v = parse(text)?;
            v..=v
        }
    };
    if range.is_empty() {
        return Err(format!("range {text:?} is empty or reversed"));
    }
    Ok(range)
}

fn require_file(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("cannot read {}", path.display()),
        })
    }
}

fn require_out_dir(path: &Path) -> CliResult {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Failure {
            code: 1,
            message: format!("output directory {} does not exist", dir.display()),
        }),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn configure_threads() -> CliResult {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| config_error(format!("{THREADS_ENV} must be a non-negative integer")))?;
    if threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(())
}

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        if !self.cli.quiet {
            let _ = writeln!(self.out, "{}", line.as_ref());
        }
    }
}

/// Runs the CLI with explicit arguments and output stream; returns the exit
/// code. Diagnostics go to stderr.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| {
        let mut ctx = Ctx { cli: &cli, out };
        match &cli.command {
            Command::BuildMap(a) => build_map(&mut ctx, a),
            Command::Decode(a) => decode(&mut ctx, a),
            Command::Bench(a) => bench_cmd(&mut ctx, a),
            Command::Sweep(a) => sweep(&mut ctx, a),
            Command::DemoCorpus(a) => demo(&mut ctx, a),
        }
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock())
}

fn prune_config(a: &BuildMapArgs) -> PruneConfig {
    let mut lens = std::collections::BTreeMap::from([(1, 1), (2, a.min_len_2)]);
    // counts above three reuse the three-candidate threshold
    for k in 3..=a.max_candidates.max(3) {
        lens.insert(k, a.min_len_3);
    }
    PruneConfig {
        max_candidates: a.max_candidates,
        min_len_by_count: lens,
        min_frequency: a.min_freq,
    }
}

fn build_map(ctx: &mut Ctx, a: &BuildMapArgs) -> CliResult {
    if a.max_n < 1 {
        return Err(config_error("--max-n must be at least 1"));
    }
    let config = prune_config(a);
    config.validate()?;
    require_file(&a.corpus)?;
    require_out_dir(&a.out)?;

    let sentences = load_corpus(&a.corpus)?;
    let vocab = corpus::build_vocab(&sentences)?;
    let seqs = tokenize_all(&sentences, &vocab);
    let raw = build_raw_map(&seqs, a.max_n)?;
    let map = token_map::prune(&raw, &config)?.with_vocab(vocab);
    token_map::save_map(&map, &a.out)?;

    #[derive(Serialize)]
    struct BuildSummary {
        sentences: usize,
        vocab_size: usize,
        raw_keys: usize,
        raw_candidates: usize,
        keys: usize,
        candidates: usize,
        pruned_keys: usize,
        pruned_candidates: usize,
    }
    let s = BuildSummary {
        sentences: sentences.len(),
        vocab_size: map.vocab().map_or(0, Vocab::len),
        raw_keys: raw.key_count(),
        raw_candidates: raw.candidate_count(),
        keys: map.key_count(),
        candidates: map.candidate_count(),
        pruned_keys: raw.key_count() - map.key_count(),
        pruned_candidates: raw.candidate_count() - map.candidate_count(),
    };
    match ctx.cli.format {
        Format::Json => ctx.say(serde_json::to_string(&s).expect("summary serializes")),
        Format::Csv => {
            ctx.say("sentences,vocab_size,raw_keys,raw_candidates,keys,candidates,pruned_keys,pruned_candidates");
            ctx.say(format!(
                "{},{},{},{},{},{},{},{}",
                s.sentences,
                s.vocab_size,
                s.raw_keys,
                s.raw_candidates,
                s.keys,
                s.candidates,
                s.pruned_keys,
                s.pruned_candidates
            ));
        }
    }
    Ok(())
}

/// Loads the map and the model corpus and checks that they share a vocabulary.
fn load_map_and_model(
    map: &Path,
    model_corpus: &Path,
    order: usize,
) -> CliResult<(TokenMap, Vocab, CorpusLm)> {
    let map = token_map::load_map(map)?;
    let sentences = load_corpus(model_corpus)?;
    let vocab = corpus::build_vocab(&sentences)?;
    if let Some(map_vocab) = map.vocab() {
        if *map_vocab != vocab {
            return Err(Error::VocabMismatch {
                map: map_vocab.len(),
                model: vocab.len(),
            }
            .into());
        }
    }
    let lm = CorpusLm::from_corpus(&sentences, &vocab, order);
    Ok((map, vocab, lm))
}

fn check_noise(noise: f64) -> CliResult {
    if (0.0..=1.0).contains(&noise) {
        Ok(())
    } else {
        Err(config_error("--noise must lie in [0, 1]"))
    }
}

fn decode(ctx: &mut Ctx, a: &DecodeArgs) -> CliResult {
    check_noise(a.noise)?;
    if a.lm_order < 1 {
        return Err(config_error("--lm-order must be at least 1"));
    }
    let config = EngineConfig {
        max_output_len: a.max_len,
        ..EngineConfig::default()
    };
    config.validate()?;
    require_file(&a.map)?;
    require_file(&a.model_corpus)?;

    let (map, vocab, lm) = load_map_and_model(&a.map, &a.model_corpus, a.lm_order)?;
    let model = NoisyLm::new(&lm, a.noise, ctx.cli.seed);
    let mut prompt = vec![SOT];
    prompt.extend(
        tokenize(&a.prompt, &vocab)
            .into_iter()
            .filter(|&t| t != EOS),
    );

    let (generated, trace) = speculative_decode(&model, &map, &prompt, &config)?;
    let (_, ar_trace) = autoregressive_decode(&model, &prompt, a.max_len);
    let text = detokenize(&generated, &vocab);

    #[derive(Serialize)]
    struct DecodeSummary<'a> {
        text: &'a str,
        tokens: &'a [u32],
        forward_passes: usize,
        ar_forward_passes: usize,
        draft_steps: usize,
        proposed: usize,
        accepted: usize,
    }
    let s = DecodeSummary {
        text: &text,
        tokens: &generated,
        forward_passes: trace.forward_passes(),
        ar_forward_passes: ar_trace.forward_passes(),
        draft_steps: trace.draft_steps().count(),
        proposed: trace.proposed(),
        accepted: trace.accepted(),
    };
    match ctx.cli.format {
        Format::Json if !ctx.cli.quiet => {
            let _ = writeln!(
                ctx.out,
                "{}",
                serde_json::to_string(&s).expect("summary serializes")
            );
        }
        _ => {
            let _ = writeln!(ctx.out, "{text}");
            ctx.say(format!(
                "forward_passes={} ar_forward_passes={} draft_steps={} accepted/proposed={}/{}",
                s.forward_passes, s.ar_forward_passes, s.draft_steps, s.accepted, s.proposed
            ));
        }
    }
    Ok(())
}

fn bench_cmd(ctx: &mut Ctx, a: &BenchArgs) -> CliResult {
    check_noise(a.noise)?;
    let cost = CostModel::preset(&a.cost_preset)?;
    for path in [&a.map, &a.model_corpus, &a.test] {
        require_file(path)?;
    }
    require_out_dir(&a.out)?;

    let (map, vocab, lm) = load_map_and_model(&a.map, &a.model_corpus, a.lm_order)?;
    let test = load_corpus(&a.test)?;
    if test.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    let utterances = tokenize_all(&test, &vocab);
    let options = BenchOptions {
        noise: a.noise,
        seed: ctx.cli.seed,
        ar_denominator: match a.ar_denominator {
            Denominator::All => ArDenominator::AllCandidates,
            Denominator::Winner => ArDenominator::WinningCandidate,
        },
        wall_clock: a.wall_clock,
        ..BenchOptions::default()
    };
    let report = bench::run_bench(&lm, &utterances, &map, &cost, &options)?;
    let body = match ctx.cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    write_file(&a.out, &body)?;
    let s = &report.summary;
    ctx.say(format!(
        "S={:.4} A_r={:.2}{} A_l={:.4} passes={}/{} lossless={}",
        s.speedup,
        s.acceptance_rate,
        if s.no_drafts { " (no_drafts)" } else { "" },
        s.avg_acceptance_length,
        s.forward_passes_speculative,
        s.forward_passes_baseline,
        s.outputs_match
    ));
    Ok(())
}

fn sweep(ctx: &mut Ctx, a: &SweepArgs) -> CliResult {
    check_noise(a.noise)?;
    require_out_dir(&a.out)?;
    let rows: Vec<SweepRow> = match a.mode {
        SweepMode::Candidates => {
            let ks = parse_range(a.range.as_deref().unwrap_or("1..4")).map_err(config_error)?;
            let lengths = parse_range(&a.lengths).map_err(config_error)?;
            let cost = CostModel::preset(a.cost_preset.as_deref().unwrap_or("paper-fit"))?;
            let sweep = bench::sweep_candidates_vs_length(&cost, ks, lengths)?;
            write_file(&a.out, &bench::sweep_csv(&sweep.rows))?;
            for (k, crossover) in &sweep.crossovers {
                ctx.say(match crossover {
                    Some(len) => format!("k={k} crossover={len}"),
                    None => format!("k={k} crossover=none"),
                });
            }
            return Ok(());
        }
        SweepMode::Ngram => {
            let orders = parse_range(a.range.as_deref().unwrap_or("1..6")).map_err(config_error)?;
            let cost = CostModel::preset(a.cost_preset.as_deref().unwrap_or("forward-passes"))?;
            if a.lm_order < 1 {
                return Err(config_error("--lm-order must be at least 1"));
            }
            let (train, test) = match (&a.train, &a.test) {
                (Some(train), Some(test)) => {
                    require_file(train)?;
                    require_file(test)?;
                    (load_corpus(train)?, load_corpus(test)?)
                }
                _ => synthetic::maintenance_split(DEMO_TRAIN, DEMO_TEST, ctx.cli.seed),
            };
            let vocab = corpus::build_vocab(&train)?;
            let train_seqs = tokenize_all(&train, &vocab);
            let test_seqs = tokenize_all(&test, &vocab);
            let lm = CorpusLm::from_sequences(&train_seqs, vocab.len(), a.lm_order);
            let options = BenchOptions {
                noise: a.noise,
                seed: ctx.cli.seed,
                ..BenchOptions::default()
            };
            bench::sweep_ngram_order(
                &train_seqs,
                &vocab,
                &lm,
                &test_seqs,
                &cost,
                orders,
                &PruneConfig::default(),
                &options,
            )?
        }
    };
    write_file(&a.out, &bench::sweep_csv(&rows))?;
    if let Some(best) = rows.iter().fold(None::<&SweepRow>, |best, r| match best {
        Some(b) if b.speedup >= r.speedup => Some(b),
        _ => Some(r),
    }) {
        ctx.say(format!("best n={} S={:.4}", best.value, best.speedup));
    }
    Ok(())
}

fn demo(ctx: &mut Ctx, a: &DemoArgs) -> CliResult {
    if a.sentences == 0 {
        return Err(config_error("--sentences must be at least 1"));
    }
    require_out_dir(&a.out)?;
    let (train, test) = synthetic::maintenance_split(a.sentences, a.test_sentences, ctx.cli.seed);
    write_file(&a.out, &(train.join("\n") + "\n"))?;
    if let Some(path) = &a.test_out {
        require_out_dir(path)?;
        write_file(path, &(test.join("\n") + "\n"))?;
    }
    ctx.say(format!(
        "wrote {} training and {} test sentences",
        train.len(),
        test.len()
    ));
    Ok(())
}
