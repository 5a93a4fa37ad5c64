//! Model-free speculative decoding with n-gram token map drafting.
//!
//! A [`TokenMap`] mined from a domain corpus proposes whole continuations
//! for the current decode context; a [`MainModel`] verifies them and the
//! [`engine`] keeps the confirmed prefix plus the model's own correction.
//! [`bench`] measures the result under a deterministic decode-cost model.

pub mod bench;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod model;
pub mod synthetic;
pub mod token_map;

pub use corpus::{TokenId, TokenSeq, Vocab, EOS, SOT, UNK};
pub use engine::{
    batch_decode, speculative_decode, DecodeTrace, EngineConfig, StepKind, StepRecord,
};
pub use error::{Error, Result};
pub use model::{autoregressive_decode, CorpusLm, MainModel, NoisyLm, TranscriptLm};
pub use token_map::{build_raw_map, prune, Candidate, PruneConfig, TokenMap};
