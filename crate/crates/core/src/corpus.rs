//! Corpus ingestion and deterministic word-level tokenization.
//!
//! Token ids `0..3` are reserved: [`SOT`] marks the start of a transcript,
//! [`EOS`] terminates every tokenized sentence and [`UNK`] stands in for
//! words the vocabulary has never seen. Corpus-derived ids start at 3 and
//! are assigned in first-appearance order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Ordered token ids. Tokenized sentences never contain [`SOT`] and carry a
/// single trailing [`EOS`]; decode contexts start with [`SOT`].
pub type TokenSeq = Vec<TokenId>;

pub const SOT: TokenId = 0;
pub const EOS: TokenId = 1;
pub const UNK: TokenId = 2;
pub const NUM_RESERVED: usize = 3;

const RESERVED_NAMES: [&str; NUM_RESERVED] = ["<|sot|>", "<|eos|>", "<|unk|>"];

#[inline]
pub fn is_reserved(token: TokenId) -> bool {
    (token as usize) < NUM_RESERVED
}

/// Bidirectional mapping between surface words and token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    id_to_string: Vec<String>,
    string_to_id: HashMap<String, TokenId>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self {
            id_to_string: RESERVED_NAMES.iter().map(|s| s.to_string()).collect(),
            string_to_id: HashMap::new(),
        }
    }
}

impl Vocab {
    /// Builds a vocabulary from whitespace-separated sentences.
    pub fn build<S: AsRef<str>>(corpus: &[S]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut vocab = Vocab::default();
        for sentence in corpus {
            for word in sentence.as_ref().split_whitespace() {
                vocab.insert(word);
            }
        }
        Ok(vocab)
    }

    /// Rebuilds a vocabulary from its full id-ordered string table, reserved
    /// entries included.
    pub fn from_strings(strings: Vec<String>) -> Result<Self> {
        if strings.len() < NUM_RESERVED
            || strings[..NUM_RESERVED]
                .iter()
                .zip(RESERVED_NAMES)
                .any(|(s, r)| s != r)
        {
            return Err(Error::CorruptMap(
                "vocabulary is missing reserved entries".into(),
            ));
        }
        let mut vocab = Vocab::default();
        for word in &strings[NUM_RESERVED..] {
            if vocab.string_to_id.contains_key(word) || word.is_empty() {
                return Err(Error::CorruptMap(format!(
                    "duplicate or empty vocabulary entry {word:?}"
                )));
            }
            vocab.insert(word);
        }
        Ok(vocab)
    }

    fn insert(&mut self, word: &str) -> TokenId {
        if let Some(&id) = self.string_to_id.get(word) {
            return id;
        }
        let id = self.id_to_string.len() as TokenId;
        self.id_to_string.push(word.to_owned());
        self.string_to_id.insert(word.to_owned(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.id_to_string.len()
    }

    /// True when only the reserved entries are present.
    pub fn is_empty(&self) -> bool {
        self.id_to_string.len() == NUM_RESERVED
    }

    /// Id of a non-reserved word.
    pub fn id(&self, word: &str) -> Option<TokenId> {
        self.string_to_id.get(word).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.id_to_string.get(id as usize).map(String::as_str)
    }

    pub fn strings(&self) -> &[String] {
        &self.id_to_string
    }
}

impl Serialize for Vocab {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.id_to_string.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocab {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let strings = Vec::<String>::deserialize(deserializer)?;
        Vocab::from_strings(strings).map_err(serde::de::Error::custom)
    }
}

/// Converts text to token ids. Implementations must be pure.
pub trait Tokenizer {
    fn encode(&self, sentence: &str) -> TokenSeq;
    fn decode(&self, tokens: &[TokenId]) -> String;
}

/// Splits on Unicode whitespace and looks each word up in the vocabulary.
#[derive(Debug, Clone, Copy)]
pub struct WhitespaceTokenizer<'a> {
    vocab: &'a Vocab,
}

impl<'a> WhitespaceTokenizer<'a> {
    pub fn new(vocab: &'a Vocab) -> Self {
        Self { vocab }
    }
}

impl Tokenizer for WhitespaceTokenizer<'_> {
    fn encode(&self, sentence: &str) -> TokenSeq {
        sentence
            .split_whitespace()
            .map(|w| self.vocab.id(w).unwrap_or(UNK))
            .chain(std::iter::once(EOS))
            .collect()
    }

    fn decode(&self, tokens: &[TokenId]) -> String {
        tokens
            .iter()
            .filter(|&&t| !is_reserved(t))
            .filter_map(|&t| self.vocab.token(t))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn build_vocab<S: AsRef<str>>(corpus: &[S]) -> Result<Vocab> {
    Vocab::build(corpus)
}

pub fn tokenize(sentence: &str, vocab: &Vocab) -> TokenSeq {
    WhitespaceTokenizer::new(vocab).encode(sentence)
}

/// Joins the non-reserved tokens' strings with single spaces.
pub fn detokenize(tokens: &[TokenId], vocab: &Vocab) -> String {
    WhitespaceTokenizer::new(vocab).decode(tokens)
}

pub fn tokenize_all<S: AsRef<str>>(corpus: &[S], vocab: &Vocab) -> Vec<TokenSeq> {
    let tok = WhitespaceTokenizer::new(vocab);
    corpus.iter().map(|s| tok.encode(s.as_ref())).collect()
}

/// Reads one sentence per line. Blank lines are skipped, trailing whitespace
/// (including a CR before the LF) is trimmed.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut sentences = Vec::new();
    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(raw).map_err(|_| Error::Encoding {
            path: path.to_path_buf(),
            line: idx + 1,
        })?;
        let line = line.trim_end();
        if !line.trim_start().is_empty() {
            sentences.push(line.to_owned());
        }
    }
    Ok(sentences)
}
