//! Zero-OOV filtering of downstream evaluation datasets.
//!
//! An example is kept only if every token of every checked text field is
//! in-vocabulary, an integer, or a symbol. Which fields are checked comes
//! from a per-task schema, so heterogeneous task formats need no code.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocabulary::{classify_token, word_tokens, TokenClass, Vocabulary};

/// Which fields of a task's records contain text to check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSchema {
    pub task: String,
    pub text_fields: Vec<String>,
}

impl TaskSchema {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))
    }
}

/// One evaluation instance: checked text fields plus an opaque label.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalExample {
    pub id: String,
    /// Field name → text, in declaration order.
    pub fields: Vec<(String, String)>,
    pub label: serde_json::Value,
}

/// True when the text contains no OOV token.
pub fn text_in_vocab(vocab: &Vocabulary, text: &str) -> bool {
    word_tokens(text).all(|t| classify_token(vocab, &t) != TokenClass::Oov)
}

/// True when every text field of the example is free of OOV tokens.
pub fn example_in_vocab(vocab: &Vocabulary, example: &EvalExample) -> bool {
    example
        .fields
        .iter()
        .all(|(_, text)| text_in_vocab(vocab, text))
}

/// Filtering tallies. `kept + dropped = total`; `malformed` records are a
/// subset of `dropped`; the histogram counts, per field, how many rejected
/// examples had an OOV token in that field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: u64,
    pub kept: u64,
    pub dropped: u64,
    pub malformed: u64,
    pub per_field_oov: BTreeMap<String, u64>,
}

/// Filters typed examples, preserving order; kept examples are returned
/// unmodified.
pub fn filter_eval_dataset<I>(vocab: &Vocabulary, examples: I) -> (Vec<EvalExample>, FilterReport)
where
    I: IntoIterator<Item = EvalExample>,
{
    let mut kept = Vec::new();
    let mut report = FilterReport::default();
    for example in examples {
        report.total += 1;
        let offending: Vec<&str> = example
            .fields
            .iter()
            .filter(|(_, text)| !text_in_vocab(vocab, text))
            .map(|(name, _)| name.as_str())
            .collect();
        if offending.is_empty() {
            report.kept += 1;
            kept.push(example);
        } else {
            report.dropped += 1;
            for field in offending {
                *report.per_field_oov.entry(field.to_string()).or_default() += 1;
            }
        }
    }
    (kept, report)
}

/// Filters raw JSONL lines against a schema. Kept lines are passed through
/// byte-identical. A line that is not a JSON object, or that has none of the
/// schema's text fields, counts as malformed and is dropped.
pub fn filter_eval_lines<'a, I>(
    vocab: &Vocabulary,
    schema: &TaskSchema,
    lines: I,
) -> (Vec<&'a str>, FilterReport)
where
    I: IntoIterator<Item = &'a str>,
{
    let mut kept = Vec::new();
    let mut report = FilterReport::default();
    for line in lines {
        report.total += 1;
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => {
                report.dropped += 1;
                report.malformed += 1;
                continue;
            }
        };
        let object = match value.as_object() {
            Some(o) => o,
            None => {
                report.dropped += 1;
                report.malformed += 1;
                continue;
            }
        };
        let mut present = 0;
        let mut offending = Vec::new();
        for field in &schema.text_fields {
            if let Some(text) = object.get(field).and_then(|v| v.as_str()) {
                present += 1;
                if !text_in_vocab(vocab, text) {
                    offending.push(field.as_str());
                }
            }
        }
        if present == 0 {
            report.dropped += 1;
            report.malformed += 1;
        } else if offending.is_empty() {
            report.kept += 1;
            kept.push(line);
        } else {
            report.dropped += 1;
            for field in offending {
                *report.per_field_oov.entry(field.to_string()).or_default() += 1;
            }
        }
    }
    (kept, report)
}
