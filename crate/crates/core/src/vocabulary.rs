//! Restricted word list and word-level tokenization.
//!
//! A [`Vocabulary`] is a set of case-folded words. [`word_tokenize`] splits
//! text into maximal letter runs, maximal ASCII-digit runs, and single
//! non-alphanumeric characters; [`classify_token`] assigns each token one of
//! the four [`TokenClass`] values. Whitespace separates tokens and is never
//! part of one.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Case-folds a word for vocabulary matching (char-wise Unicode lowercasing).
pub fn normalize_word(word: &str) -> String {
    word.chars().flat_map(char::to_lowercase).collect()
}

fn fold(word: &str) -> Cow<'_, str> {
    if word.chars().all(|c| !c.is_uppercase()) {
        Cow::Borrowed(word)
    } else {
        Cow::Owned(normalize_word(word))
    }
}

/// An immutable set of normalized words.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    words: HashSet<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from candidate words, one per line. Blank lines
    /// and `#`-prefixed comment lines are ignored; entries are case-folded
    /// and deduplicated.
    pub fn from_lines<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut words = HashSet::new();
        for line in lines {
            let word = line.as_ref().trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            words.insert(normalize_word(word));
        }
        Vocabulary { words }
    }

    /// Loads a vocabulary from a UTF-8 file, one word per line.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = Vec::new();
        for line in BufReader::new(file).lines() {
            lines.push(line.map_err(|e| Error::io(path, e))?);
        }
        Ok(Self::from_lines(lines))
    }

    /// Number of distinct normalized words.
    pub fn size(&self) -> usize {
        self.words.len()
    }

    /// Case-insensitive membership test.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(fold(word).as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Classification of a word-level token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum TokenClass {
    InVocab,
    Integer,
    Symbol,
    Oov,
}

/// A word-level token: a slice of the source text plus its byte span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordToken<'a> {
    pub surface: &'a str,
    pub start: usize,
    pub end: usize,
}

impl WordToken<'_> {
    pub fn byte_span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    /// The case-folded surface form.
    pub fn normalized(&self) -> Cow<'_, str> {
        fold(self.surface)
    }

    fn is_letters(&self) -> bool {
        self.surface
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic())
    }
}

/// Iterator over the word-level tokens of a text.
pub fn word_tokens(text: &str) -> WordTokens<'_> {
    WordTokens { text, pos: 0 }
}

/// Splits text into word-level tokens.
pub fn word_tokenize(text: &str) -> Vec<WordToken<'_>> {
    word_tokens(text).collect()
}

pub struct WordTokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Iterator for WordTokens<'a> {
    type Item = WordToken<'a>;

    fn next(&mut self) -> Option<WordToken<'a>> {
        let rest = &self.text[self.pos..];
        let mut chars = rest.char_indices();
        let (mut start, mut c) = chars.next()?;
        while c.is_whitespace() {
            (start, c) = chars.next()?;
        }
        let start = self.pos + start;
        let end = if c.is_alphabetic() {
            self.scan_run(start, char::is_alphabetic)
        } else if c.is_ascii_digit() {
            self.scan_run(start, |c| c.is_ascii_digit())
        } else {
            start + c.len_utf8()
        };
        self.pos = end;
        Some(WordToken {
            surface: &self.text[start..end],
            start,
            end,
        })
    }
}

impl WordTokens<'_> {
    fn scan_run(&self, start: usize, pred: impl Fn(char) -> bool) -> usize {
        let mut end = start;
        for c in self.text[start..].chars() {
            if !pred(c) {
                break;
            }
            end += c.len_utf8();
        }
        end
    }
}

/// Assigns a token its class. Checked in order: integer, symbol, in-vocab,
/// OOV; the first three are structural, so every token gets exactly one
/// class and reclassification is idempotent.
pub fn classify_token(vocab: &Vocabulary, token: &WordToken<'_>) -> TokenClass {
    let s = token.surface;
    if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
        return TokenClass::Integer;
    }
    let mut chars = s.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if !c.is_alphabetic() && !c.is_ascii_digit() {
            return TokenClass::Symbol;
        }
    }
    if vocab.contains(s) {
        TokenClass::InVocab
    } else {
        TokenClass::Oov
    }
}

/// Counts the tokens of a text and how many of them are OOV letter tokens.
pub fn count_tokens(text: &str, vocab: &Vocabulary) -> (u64, u64) {
    let mut total = 0;
    let mut oov = 0;
    for token in word_tokens(text) {
        total += 1;
        if token.is_letters() && classify_token(vocab, &token) == TokenClass::Oov {
            oov += 1;
        }
    }
    (total, oov)
}
