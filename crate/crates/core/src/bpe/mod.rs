//! Byte-level byte-pair encoding.
//!
//! Training starts from the 256 single-byte tokens, reserves the configured
//! special tokens, then repeatedly merges the most frequent adjacent pair
//! within pre-token boundaries until the target vocabulary size is reached
//! or no pair occurs at least twice. Frequency ties break on the
//! lexicographically smallest (left, right) byte strings, so training is
//! deterministic for a fixed corpus. Pair occurrences are counted
//! non-overlapping left-to-right, matching how merges are applied.
//!
//! Ids are assigned base alphabet first, then special tokens, then merges
//! in learned order. The byte-level alphabet means any text encodes without
//! unknown tokens and `decode(encode(t)) = t`.

mod bytes;
mod pretokenize;

pub use bytes::{display_bytes, parse_bytes};
pub use pretokenize::pre_tokenize;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Number of single-byte base tokens.
pub const BYTE_ALPHABET: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BpeTrainConfig {
    pub vocab_size: usize,
    pub special_tokens: Vec<String>,
}

impl Default for BpeTrainConfig {
    fn default() -> Self {
        BpeTrainConfig {
            vocab_size: 15_000,
            special_tokens: vec!["<|bos|>".into(), "<|eos|>".into(), "<|pad|>".into()],
        }
    }
}

impl BpeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let reserved = BYTE_ALPHABET + self.special_tokens.len();
        if self.vocab_size < reserved {
            return Err(Error::invalid(
                "vocab_size",
                format!("{} is below the {reserved} reserved ids", self.vocab_size),
            ));
        }
        let mut seen = HashSet::new();
        for token in &self.special_tokens {
            if token.is_empty() || !seen.insert(token) {
                return Err(Error::invalid(
                    "special_tokens",
                    "must be distinct and non-empty",
                ));
            }
        }
        Ok(())
    }
}

/// A trained tokenizer: ordered merges plus the id ↔ token tables.
#[derive(Debug, Clone)]
pub struct BpeModel {
    config: BpeTrainConfig,
    vocab: Vec<Vec<u8>>,
    merges: Vec<(TokenId, TokenId)>,
    merge_table: HashMap<(TokenId, TokenId), (u32, TokenId)>,
    token_ids: HashMap<Vec<u8>, TokenId>,
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct Word {
    syms: Vec<TokenId>,
    count: u64,
}

/// Calls `f` for each counted pair occurrence: adjacent pairs left to right,
/// with a repeat of an identical pair never overlapping the occurrence
/// before it ("aaa" holds one "aa").
fn scan_pairs(syms: &[TokenId], mut f: impl FnMut((TokenId, TokenId))) {
    let mut skip = false;
    for i in 0..syms.len().saturating_sub(1) {
        let pair = (syms[i], syms[i + 1]);
        if pair.0 == pair.1 {
            if skip {
                skip = false;
                continue;
            }
            f(pair);
            skip = true;
        } else {
            f(pair);
            skip = false;
        }
    }
}

/// Replaces occurrences of `(left, right)` with `merged`, left to right,
/// non-overlapping.
fn apply_merge(syms: &[TokenId], left: TokenId, right: TokenId, merged: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == left && syms[i + 1] == right {
            out.push(merged);
            i += 2;
        } else {
            out.push(syms[i]);
            i += 1;
        }
    }
    out
}

impl BpeModel {
    /// Trains a model; see the module docs for the algorithm.
    pub fn train<I, S>(corpus: I, config: BpeTrainConfig) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::train_with_merge_counts(corpus, config).map(|(model, _)| model)
    }

    /// Like [`BpeModel::train`], also returning each merge's pair count at
    /// the moment it was selected (non-increasing over the run).
    pub fn train_with_merge_counts<I, S>(
        corpus: I,
        config: BpeTrainConfig,
    ) -> Result<(Self, Vec<u64>)>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        config.validate()?;

        let mut pretoken_counts: HashMap<String, u64> = HashMap::new();
        for text in corpus {
            for pretoken in pre_tokenize(text.as_ref()) {
                *pretoken_counts.entry(pretoken.to_string()).or_default() += 1;
            }
        }
        if pretoken_counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let mut model = Self::with_base_vocab(config);

        let mut entries: Vec<(String, u64)> = pretoken_counts.into_iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut words: Vec<Word> = entries
            .into_iter()
            .map(|(text, count)| Word {
                syms: text.bytes().map(TokenId::from).collect(),
                count,
            })
            .collect();

        let mut pair_counts: HashMap<(TokenId, TokenId), u64> = HashMap::new();
        let mut pair_words: HashMap<(TokenId, TokenId), HashSet<usize>> = HashMap::new();
        for (idx, word) in words.iter().enumerate() {
            scan_pairs(&word.syms, |pair| {
                *pair_counts.entry(pair).or_default() += word.count;
                pair_words.entry(pair).or_default().insert(idx);
            });
        }

        let mut banned: HashSet<(TokenId, TokenId)> = HashSet::new();
        let mut merge_counts = Vec::new();
        while model.vocab.len() < model.config.vocab_size {
            let mut best: Option<((TokenId, TokenId), u64)> = None;
            for (&pair, &count) in &pair_counts {
                if count < 2 || banned.contains(&pair) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((best_pair, best_count)) => {
                        count > best_count
                            || (count == best_count
                                && model.pair_bytes(pair) < model.pair_bytes(best_pair))
                    }
                };
                if better {
                    best = Some((pair, count));
                }
            }
            let Some((pair, count)) = best else { break };

            let merged_bytes = model.pair_concat(pair);
            if model.token_ids.contains_key(&merged_bytes) {
                // would collide with an existing token (a special); never merge it
                banned.insert(pair);
                continue;
            }
            let merged = model.push_token(merged_bytes);
            model
                .merge_table
                .insert(pair, (model.merges.len() as u32, merged));
            model.merges.push(pair);
            merge_counts.push(count);

            let affected = pair_words.remove(&pair).unwrap_or_default();
            for idx in affected {
                let word = &mut words[idx];
                scan_pairs(&word.syms, |p| {
                    if let Some(c) = pair_counts.get_mut(&p) {
                        *c -= word.count;
                        if *c == 0 {
                            pair_counts.remove(&p);
                        }
                    }
                });
                word.syms = apply_merge(&word.syms, pair.0, pair.1, merged);
                let count = word.count;
                scan_pairs(&word.syms, |p| {
                    *pair_counts.entry(p).or_default() += count;
                    pair_words.entry(p).or_default().insert(idx);
                });
            }
            debug_assert!(!pair_counts.contains_key(&pair));
        }
        Ok((model, merge_counts))
    }

    fn with_base_vocab(config: BpeTrainConfig) -> Self {
        let mut vocab: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        vocab.extend(config.special_tokens.iter().map(|s| s.as_bytes().to_vec()));
        let token_ids = vocab
            .iter()
            .enumerate()
            .map(|(id, bytes)| (bytes.clone(), id as TokenId))
            .collect();
        BpeModel {
            config,
            vocab,
            merges: Vec::new(),
            merge_table: HashMap::new(),
            token_ids,
        }
    }

    fn push_token(&mut self, bytes: Vec<u8>) -> TokenId {
        let id = self.vocab.len() as TokenId;
        self.token_ids.insert(bytes.clone(), id);
        self.vocab.push(bytes);
        id
    }

    fn pair_bytes(&self, pair: (TokenId, TokenId)) -> (&[u8], &[u8]) {
        (&self.vocab[pair.0 as usize], &self.vocab[pair.1 as usize])
    }

    fn pair_concat(&self, pair: (TokenId, TokenId)) -> Vec<u8> {
        let (l, r) = self.pair_bytes(pair);
        let mut out = Vec::with_capacity(l.len() + r.len());
        out.extend_from_slice(l);
        out.extend_from_slice(r);
        out
    }

    // -----------------------------------------------------------------------
    // Encode / decode
    // -----------------------------------------------------------------------

    /// Encodes text to token ids, applying merges in learned order within
    /// each pre-token.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut ids = Vec::new();
        for pretoken in pre_tokenize(text) {
            self.encode_pretoken(pretoken.as_bytes(), &mut ids);
        }
        ids
    }

    fn encode_pretoken(&self, bytes: &[u8], out: &mut Vec<TokenId>) {
        let mut syms: Vec<TokenId> = bytes.iter().map(|&b| TokenId::from(b)).collect();
        loop {
            // earliest-learned merge still applicable
            let mut best: Option<(u32, TokenId, (TokenId, TokenId))> = None;
            for window in syms.windows(2) {
                if let Some(&(rank, merged)) = self.merge_table.get(&(window[0], window[1])) {
                    if best.is_none_or(|(r, _, _)| rank < r) {
                        best = Some((rank, merged, (window[0], window[1])));
                    }
                }
            }
            let Some((_, merged, pair)) = best else { break };
            syms = apply_merge(&syms, pair.0, pair.1, merged);
        }
        out.extend_from_slice(&syms);
    }

    /// Concatenated bytes of the given ids.
    pub fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for &id in ids {
            let bytes = self
                .vocab
                .get(id as usize)
                .ok_or(Error::TokenIdOutOfRange {
                    id,
                    vocab_size: self.vocab.len(),
                })?;
            out.extend_from_slice(bytes);
        }
        Ok(out)
    }

    /// Decodes ids to text. Byte sequences that are not valid UTF-8 (only
    /// possible for id sequences that did not come from `encode`) decode
    /// with replacement characters.
    pub fn decode(&self, ids: &[TokenId]) -> Result<String> {
        Ok(String::from_utf8_lossy(&self.decode_bytes(ids)?).into_owned())
    }

    // -----------------------------------------------------------------------
    // Accessors
    // -----------------------------------------------------------------------

    pub fn config(&self) -> &BpeTrainConfig {
        &self.config
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.vocab.get(id as usize).map(Vec::as_slice)
    }

    pub fn id_for(&self, bytes: &[u8]) -> Option<TokenId> {
        self.token_ids.get(bytes).copied()
    }

    /// Id of a configured special token.
    pub fn special_id(&self, token: &str) -> Option<TokenId> {
        self.config
            .special_tokens
            .iter()
            .position(|t| t == token)
            .map(|i| (BYTE_ALPHABET + i) as TokenId)
    }

    // -----------------------------------------------------------------------
    // Serialization
    // -----------------------------------------------------------------------

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            config: self.config.clone(),
            merges: self
                .merges
                .iter()
                .map(|&(l, r)| {
                    (
                        display_bytes(&self.vocab[l as usize]),
                        display_bytes(&self.vocab[r as usize]),
                    )
                })
                .collect(),
            vocab: self.vocab.iter().map(|b| display_bytes(b)).collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json)
            .map_err(|e| Error::parse("<bpe model>", e.line() as u64, e.to_string()))?;
        Self::from_file(file, Path::new("<bpe model>"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        writer
            .write_all(self.to_json().as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parsed: ModelFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
        Self::from_file(parsed, path)
    }

    fn from_file(file: ModelFile, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::parse(path, 0, msg);
        file.config.validate()?;
        let reserved = BYTE_ALPHABET + file.config.special_tokens.len();
        if file.vocab.len() != reserved + file.merges.len() {
            return Err(bad(format!(
                "vocab has {} entries, expected {}",
                file.vocab.len(),
                reserved + file.merges.len()
            )));
        }
        let mut model = Self::with_base_vocab(file.config);
        for (i, entry) in file.vocab.iter().enumerate().take(reserved) {
            let bytes = parse_bytes(entry).ok_or_else(|| bad(format!("unparseable token {i}")))?;
            if bytes != model.vocab[i] {
                return Err(bad(format!("reserved token {i} does not match its id")));
            }
        }
        for (rank, (left, right)) in file.merges.iter().enumerate() {
            let left_bytes =
                parse_bytes(left).ok_or_else(|| bad(format!("unparseable merge {rank}")))?;
            let right_bytes =
                parse_bytes(right).ok_or_else(|| bad(format!("unparseable merge {rank}")))?;
            let (Some(l), Some(r)) = (model.id_for(&left_bytes), model.id_for(&right_bytes)) else {
                return Err(bad(format!("merge {rank} references unknown tokens")));
            };
            let merged_bytes = model.pair_concat((l, r));
            let expected = parse_bytes(&file.vocab[reserved + rank])
                .ok_or_else(|| bad(format!("unparseable token {}", reserved + rank)))?;
            if merged_bytes != expected {
                return Err(bad(format!("merge {rank} does not produce vocab entry")));
            }
            let merged = model.push_token(merged_bytes);
            model.merge_table.insert((l, r), (rank as u32, merged));
            model.merges.push((l, r));
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    config: BpeTrainConfig,
    merges: Vec<(String, String)>,
    vocab: Vec<String>,
}
