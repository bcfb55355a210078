//! Sentence-granular corpus filtering under an OOV budget.
//!
//! Documents are split into sentences; sentences accumulate into a chunk as
//! long as the chunk's OOV fraction stays within budget. A sentence that
//! would push the chunk over budget is dropped whole and concludes the
//! chunk, which is emitted if it has reached `min_tokens` and discarded
//! otherwise; accumulation then restarts at the next sentence. A chunk still
//! open at the end of the document is emitted when it reached `min_tokens`
//! (a shorter tail is dropped unless `drop_short_tail` is off).
//!
//! The budget comparison uses exact integer arithmetic, never floats.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocabulary::{classify_token, word_tokens, TokenClass, Vocabulary};

/// An OOV budget as an exact rational in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OovBudget {
    num: u64,
    den: u64,
}

impl OovBudget {
    /// The default 1.5% budget.
    pub const DEFAULT: OovBudget = OovBudget {
        num: 150,
        den: 10_000,
    };

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::invalid(
                "oov_budget",
                format!("{num}/{den} is not a fraction in [0, 1]"),
            ));
        }
        Ok(OovBudget { num, den })
    }

    /// Parses a decimal fraction such as `0.015` exactly.
    pub fn from_decimal_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("oov_budget", format!("{s:?} is not a decimal in [0, 1]"));
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || frac_part.len() > 18
        {
            return Err(bad());
        }
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Self::from_ratio(num, den)
    }

    /// True when `oov / tokens` does not exceed the budget.
    pub fn within(&self, oov: u64, tokens: u64) -> bool {
        (oov as u128) * (self.den as u128) <= (self.num as u128) * (tokens as u128)
    }

    /// Largest OOV count allowed for a chunk of `tokens` tokens.
    pub fn max_oov(&self, tokens: u64) -> u64 {
        ((self.num as u128) * (tokens as u128) / (self.den as u128)) as u64
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for OovBudget {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for OovBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // powers of ten display as the decimal they were parsed from
        let mut den = self.den;
        let mut digits = 0usize;
        while den > 1 && den.is_multiple_of(10) {
            den /= 10;
            digits += 1;
        }
        if den == 1 {
            let scale = 10u64.pow(digits as u32);
            write!(
                f,
                "{}.{:0width$}",
                self.num / scale,
                self.num % scale,
                width = digits.max(1)
            )
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for OovBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((n, d)) => {
                let bad = || Error::invalid("oov_budget", format!("{s:?} is not a fraction"));
                Self::from_ratio(n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?)
            }
            None => Self::from_decimal_str(s),
        }
    }
}

impl Serialize for OovBudget {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OovBudget {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChunkerConfig {
    /// Tokens a chunk must accumulate before it may be emitted.
    pub min_tokens: u64,
    /// Highest tolerated OOV fraction within a chunk.
    #[serde(default)]
    pub oov_budget: OovBudget,
    /// Drop a below-minimum chunk left open at the end of a document.
    #[serde(default = "default_true")]
    pub drop_short_tail: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        ChunkerConfig {
            min_tokens: 100,
            oov_budget: OovBudget::DEFAULT,
            drop_short_tail: true,
        }
    }
}

impl ChunkerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_tokens == 0 {
            return Err(Error::invalid("min_tokens", "must be at least 1"));
        }
        Ok(())
    }
}

/// Byte range of one sentence in its document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

/// Splits text into sentence spans. Boundaries occur after `.`, `!`, or `?`
/// followed by whitespace (or end of input) and at whitespace runs that
/// contain a newline. Deliberately naive: abbreviations like "Dr." over-split.
pub fn split_sentences(text: &str) -> Vec<SentenceSpan> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let end_of = |k: usize| chars[k].0 + chars[k].1.len_utf8();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        while i < n && chars[i].1.is_whitespace() {
            i += 1;
        }
        if i >= n {
            break;
        }
        let start = chars[i].0;
        let mut last_nonws = i;
        let mut end = None;
        while i < n {
            let c = chars[i].1;
            if c.is_whitespace() {
                let mut has_newline = false;
                while i < n && chars[i].1.is_whitespace() {
                    has_newline |= matches!(chars[i].1, '\n' | '\r');
                    i += 1;
                }
                if has_newline {
                    end = Some(end_of(last_nonws));
                    break;
                }
            } else {
                last_nonws = i;
                i += 1;
                if matches!(c, '.' | '!' | '?') && (i >= n || chars[i].1.is_whitespace()) {
                    end = Some(end_of(last_nonws));
                    break;
                }
            }
        }
        spans.push(SentenceSpan {
            start,
            end: end.unwrap_or_else(|| end_of(last_nonws)),
        });
    }
    spans
}

/// One input document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub id: String,
    pub source: String,
    pub text: String,
}

/// A retained span of whole sentences from one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub source: String,
    pub text: String,
    pub token_count: u64,
    pub oov_count: u64,
}

/// Chunks of one document plus its total token count.
#[derive(Debug, Clone)]
pub struct DocChunks {
    pub chunks: Vec<Chunk>,
    pub input_tokens: u64,
}

struct SentenceStat {
    start: usize,
    end: usize,
    tokens: u64,
    oov: u64,
}

fn sentence_stats(text: &str, vocab: &Vocabulary) -> Vec<SentenceStat> {
    split_sentences(text)
        .into_iter()
        .map(|span| {
            let mut tokens = 0;
            let mut oov = 0;
            for token in word_tokens(&text[span.start..span.end]) {
                tokens += 1;
                if classify_token(vocab, &token) == TokenClass::Oov {
                    oov += 1;
                }
            }
            SentenceStat {
                start: span.start,
                end: span.end,
                tokens,
                oov,
            }
        })
        .collect()
}

/// Chunks one document, also reporting its input token count.
pub fn chunk_document(doc: &DocRecord, vocab: &Vocabulary, config: &ChunkerConfig) -> DocChunks {
    let stats = sentence_stats(&doc.text, vocab);
    let input_tokens = stats.iter().map(|s| s.tokens).sum();

    let mut chunks = Vec::new();
    let mut first: Option<usize> = None; // index of the chunk's first sentence
    let mut last = 0usize;
    let mut tokens = 0u64;
    let mut oov = 0u64;

    let emit = |first: usize, last: usize, tokens: u64, oov: u64, chunks: &mut Vec<Chunk>| {
        chunks.push(Chunk {
            doc_id: doc.id.clone(),
            source: doc.source.clone(),
            text: doc.text[stats[first].start..stats[last].end].to_string(),
            token_count: tokens,
            oov_count: oov,
        });
    };

    for (idx, s) in stats.iter().enumerate() {
        if config.oov_budget.within(oov + s.oov, tokens + s.tokens) {
            if first.is_none() {
                first = Some(idx);
            }
            last = idx;
            tokens += s.tokens;
            oov += s.oov;
        } else {
            // offending sentence dropped whole; forced close
            if let Some(f) = first {
                if tokens >= config.min_tokens {
                    emit(f, last, tokens, oov, &mut chunks);
                }
            }
            first = None;
            tokens = 0;
            oov = 0;
        }
    }
    if let Some(f) = first {
        if tokens >= config.min_tokens || !config.drop_short_tail {
            emit(f, last, tokens, oov, &mut chunks);
        }
    }

    DocChunks {
        chunks,
        input_tokens,
    }
}

/// Chunks of one document under the stated accumulation rule.
pub fn build_chunks(doc: &DocRecord, vocab: &Vocabulary, config: &ChunkerConfig) -> Vec<Chunk> {
    chunk_document(doc, vocab, config).chunks
}

/// Per-source filtering tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub documents: u64,
    pub input_tokens: u64,
    pub retained_tokens: u64,
    pub chunks: u64,
    pub docs_zero_chunks: u64,
}

/// Aggregate statistics of a filtering run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub per_source: BTreeMap<String, SourceStats>,
    pub skipped: u64,
}

impl FilterStats {
    pub fn record(&mut self, source: &str, doc: &DocChunks) {
        let entry = self.per_source.entry(source.to_string()).or_default();
        entry.documents += 1;
        entry.input_tokens += doc.input_tokens;
        entry.retained_tokens += doc.chunks.iter().map(|c| c.token_count).sum::<u64>();
        entry.chunks += doc.chunks.len() as u64;
        if doc.chunks.is_empty() {
            entry.docs_zero_chunks += 1;
        }
    }

    /// Associative, commutative merge of partial tallies.
    pub fn merge(&mut self, other: FilterStats) {
        for (source, stats) in other.per_source {
            let entry = self.per_source.entry(source).or_default();
            entry.documents += stats.documents;
            entry.input_tokens += stats.input_tokens;
            entry.retained_tokens += stats.retained_tokens;
            entry.chunks += stats.chunks;
            entry.docs_zero_chunks += stats.docs_zero_chunks;
        }
        self.skipped += other.skipped;
    }

    pub fn input_tokens(&self) -> u64 {
        self.per_source.values().map(|s| s.input_tokens).sum()
    }

    pub fn retained_tokens(&self) -> u64 {
        self.per_source.values().map(|s| s.retained_tokens).sum()
    }

    pub fn chunks(&self) -> u64 {
        self.per_source.values().map(|s| s.chunks).sum()
    }
}

/// Chunks a batch of documents on the current rayon pool, preserving input
/// order in the output.
pub fn chunk_batch(
    docs: &[DocRecord],
    vocab: &Vocabulary,
    config: &ChunkerConfig,
) -> Vec<DocChunks> {
    use rayon::prelude::*;
    docs.par_iter()
        .map(|doc| chunk_document(doc, vocab, config))
        .collect()
}

/// Filters a document stream into chunks. Malformed records (`Error::Parse`)
/// are skipped and counted; any other error aborts. Output order is keyed by
/// input position and is independent of `threads` (0 = one per core).
pub fn filter_corpus<I>(
    docs: I,
    vocab: &Vocabulary,
    config: &ChunkerConfig,
    threads: usize,
) -> Result<(Vec<Chunk>, FilterStats)>
where
    I: IntoIterator<Item = Result<DocRecord>>,
{
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;

    let mut stats = FilterStats::default();
    let mut parsed = Vec::new();
    for item in docs {
        match item {
            Ok(doc) => parsed.push(doc),
            Err(Error::Parse { .. }) => stats.skipped += 1,
            Err(e) => return Err(e),
        }
    }

    let mut chunks = Vec::new();
    for batch in parsed.chunks(1024) {
        let results = pool.install(|| chunk_batch(batch, vocab, config));
        for (doc, dc) in batch.iter().zip(results) {
            stats.record(&doc.source, &dc);
            chunks.extend(dc.chunks);
        }
    }
    Ok((chunks, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_lines(words.iter().copied())
    }

    fn sentences(text: &str) -> Vec<&str> {
        split_sentences(text)
            .iter()
            .map(|s| &text[s.start..s.end])
            .collect()
    }

    #[test]
    fn budget_parsing_and_comparison() {
        let b = OovBudget::from_decimal_str("0.015").unwrap();
        assert_eq!(b, OovBudget::from_ratio(15, 1000).unwrap());
        assert!(b.within(1, 67)); // 1/67 ≈ 1.49%
        assert!(!b.within(1, 66)); // 1/66 ≈ 1.52%
        assert!(b.within(0, 0));
        assert_eq!(b.max_oov(200), 3);
        assert_eq!(b.to_string(), "0.015");
        assert_eq!("0.015".parse::<OovBudget>().unwrap(), b);
        assert_eq!(
            "3/200".parse::<OovBudget>().unwrap(),
            OovBudget::from_ratio(3, 200).unwrap()
        );
        assert!(OovBudget::from_decimal_str("1.5").is_err());
        assert!(OovBudget::from_decimal_str("nope").is_err());
        assert_eq!(OovBudget::from_decimal_str("1.0").unwrap().max_oov(7), 7);
    }

    #[test]
    fn default_budget_matches_exact_rational_check() {
        let b = OovBudget::DEFAULT;
        for tokens in 1..500u64 {
            for oov in 0..=tokens {
                assert_eq!(b.within(oov, tokens), oov * 10_000 <= 150 * tokens);
            }
        }
    }

    #[test]
    fn two_terminated_sentences() {
        assert_eq!(sentences("A. B."), ["A.", "B."]);
    }

    #[test]
    fn eof_closes_final_sentence() {
        assert_eq!(sentences("no terminator"), ["no terminator"]);
    }

    #[test]
    fn abbreviations_oversplit() {
        assert_eq!(sentences("Dr. Smith left."), ["Dr.", "Smith left."]);
    }

    #[test]
    fn newline_runs_are_boundaries() {
        assert_eq!(
            sentences("one line\nanother line"),
            ["one line", "another line"]
        );
        assert_eq!(
            sentences("para one\n\npara two."),
            ["para one", "para two."]
        );
        assert_eq!(sentences("a b! c? d"), ["a b!", "c?", "d"]);
    }

    #[test]
    fn spans_cover_non_whitespace() {
        let text = " Héllo there. 3.5 is fine\n\nnext ";
        let spans = split_sentences(text);
        let mut prev_end = 0;
        for s in &spans {
            assert!(s.start >= prev_end);
            assert!(text[prev_end..s.start].chars().all(char::is_whitespace));
            prev_end = s.end;
        }
        assert!(text[prev_end..].chars().all(char::is_whitespace));
    }

    fn doc(text: &str) -> DocRecord {
        DocRecord {
            id: "d0".into(),
            source: "test".into(),
            text: text.into(),
        }
    }

    fn words(n: usize, word: &str) -> String {
        vec![word; n].join(" ")
    }

    #[test]
    fn clean_document_single_chunk() {
        // 4 sentences x 10 tokens (9 words + terminator), all in vocab
        let v = vocab(&["dog"]);
        let text = (0..4)
            .map(|_| words(9, "dog") + ".")
            .collect::<Vec<_>>()
            .join(" ");
        let cfg = ChunkerConfig {
            min_tokens: 32,
            ..ChunkerConfig::default()
        };
        let chunks = build_chunks(&doc(&text), &v, &cfg);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].token_count, 40);
        assert_eq!(chunks[0].oov_count, 0);
        assert_eq!(chunks[0].text, text);
    }

    #[test]
    fn oov_heavy_sentence_dropped_and_chunk_emitted() {
        // 3 clean sentences of 60 tokens, then one 50% OOV sentence
        let v = vocab(&["dog"]);
        let clean = words(59, "dog") + ".";
        let dirty = {
            let mut parts = Vec::new();
            for i in 0..59 {
                parts.push(if i % 2 == 0 { "zzq" } else { "dog" });
            }
            parts.join(" ") + "."
        };
        let text = format!("{clean} {clean} {clean} {dirty}");
        let cfg = ChunkerConfig {
            min_tokens: 100,
            ..ChunkerConfig::default()
        };
        let chunks = build_chunks(&doc(&text), &v, &cfg);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].token_count, 180);
        assert_eq!(chunks[0].oov_count, 0);
        assert_eq!(chunks[0].text, format!("{clean} {clean} {clean}"));
    }

    #[test]
    fn within_budget_oov_tokens_are_retained() {
        let v = vocab(&["dog"]);
        // 199 in-vocab words + 1 OOV word + terminator = 201 tokens, 1 OOV (0.49%)
        let text = format!("{} zzq dog.", words(198, "dog"));
        let cfg = ChunkerConfig {
            min_tokens: 100,
            ..ChunkerConfig::default()
        };
        let chunks = build_chunks(&doc(&text), &v, &cfg);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].oov_count, 1);
        assert_eq!(chunks[0].token_count, 201);
    }

    #[test]
    fn short_tail_dropped_or_kept() {
        let v = vocab(&["dog"]);
        let text = words(9, "dog") + ".";
        let cfg = ChunkerConfig {
            min_tokens: 100,
            ..ChunkerConfig::default()
        };
        assert!(build_chunks(&doc(&text), &v, &cfg).is_empty());
        let keep = ChunkerConfig {
            drop_short_tail: false,
            ..cfg
        };
        let chunks = build_chunks(&doc(&text), &v, &keep);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].token_count, 10);
    }

    #[test]
    fn empty_document_no_chunks() {
        let v = vocab(&["dog"]);
        let dc = chunk_document(&doc(""), &v, &ChunkerConfig::default());
        assert!(dc.chunks.is_empty());
        assert_eq!(dc.input_tokens, 0);
    }

    #[test]
    fn filter_corpus_stats_and_skips() {
        let v = vocab(&["dog"]);
        let clean = words(59, "dog") + ".";
        let dirty = words(30, "zzq") + ".";
        let text = format!("{clean} {clean} {clean} {dirty}");
        let cfg = ChunkerConfig {
            min_tokens: 100,
            ..ChunkerConfig::default()
        };
        let docs: Vec<crate::error::Result<DocRecord>> =
            vec![Ok(doc(&text)), Err(Error::parse("x.jsonl", 2, "bad json"))];
        let (chunks, stats) = filter_corpus(docs, &v, &cfg, 1).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(stats.skipped, 1);
        let s = &stats.per_source["test"];
        assert_eq!(s.retained_tokens, 180);
        assert_eq!(s.input_tokens, 211);
        assert_eq!(s.chunks, 1);
        assert_eq!(s.docs_zero_chunks, 0);
        assert!(stats.retained_tokens() <= stats.input_tokens());
    }

    #[test]
    fn empty_stream_zero_stats() {
        let v = vocab(&["dog"]);
        let (chunks, stats) = filter_corpus(Vec::new(), &v, &ChunkerConfig::default(), 4).unwrap();
        assert!(chunks.is_empty());
        assert_eq!(stats, FilterStats::default());
    }

    #[test]
    fn stats_merge_matches_single_pass() {
        let v = vocab(&["dog"]);
        let cfg = ChunkerConfig {
            min_tokens: 8,
            ..ChunkerConfig::default()
        };
        let docs: Vec<DocRecord> = (0..20)
            .map(|i| DocRecord {
                id: format!("d{i}"),
                source: if i % 3 == 0 { "a".into() } else { "b".into() },
                text: format!("{} zzq.", words(6 + i, "dog")),
            })
            .collect();
        let (_, whole) = filter_corpus(docs.iter().cloned().map(Ok), &v, &cfg, 1).unwrap();
        let (_, first) = filter_corpus(docs[..7].iter().cloned().map(Ok), &v, &cfg, 1).unwrap();
        let (_, second) = filter_corpus(docs[7..].iter().cloned().map(Ok), &v, &cfg, 1).unwrap();
        let mut merged = first.clone();
        merged.merge(second.clone());
        assert_eq!(merged, whole);
        let mut flipped = second;
        flipped.merge(first);
        assert_eq!(flipped, whole);
    }

    #[test]
    fn parallel_and_serial_outputs_identical() {
        let v = vocab(&["dog", "cat"]);
        let mk = |i: usize| DocRecord {
            id: format!("d{i}"),
            source: if i.is_multiple_of(2) {
                "a".into()
            } else {
                "b".into()
            },
            text: format!("{} zzq. {}.", words(40, "dog"), words(80, "cat")),
        };
        let docs: Vec<DocRecord> = (0..50).map(mk).collect();
        let cfg = ChunkerConfig {
            min_tokens: 30,
            ..ChunkerConfig::default()
        };
        let serial = filter_corpus(docs.iter().cloned().map(Ok), &v, &cfg, 1).unwrap();
        let parallel = filter_corpus(docs.into_iter().map(Ok), &v, &cfg, 8).unwrap();
        assert_eq!(serial.0, parallel.0);
        assert_eq!(serial.1, parallel.1);
    }
}
