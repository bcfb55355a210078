//! Word-frequency statistics: Zipf coefficient and per-source distributions.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::chunker::Chunk;
use crate::error::{Error, Result};
use crate::linfit::ols_line;
use crate::vocabulary::word_tokens;
use crate::Real;

/// Counts of normalized word types. Only letter tokens are counted;
/// integers and symbols are excluded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn add_text(&mut self, text: &str) {
        for token in word_tokens(text) {
            if token
                .surface
                .chars()
                .next()
                .is_some_and(char::is_alphabetic)
            {
                *self
                    .counts
                    .entry(token.normalized().into_owned())
                    .or_default() += 1;
                self.total += 1;
            }
        }
    }

    pub fn add(&mut self, word: &str, count: u64) {
        if count > 0 {
            *self.counts.entry(word.to_string()).or_default() += count;
            self.total += count;
        }
    }

    /// Associative merge of partial tables.
    pub fn merge(&mut self, other: FrequencyTable) {
        for (word, count) in other.counts {
            *self.counts.entry(word).or_default() += count;
        }
        self.total += other.total;
    }

    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    pub fn distinct_words(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    /// Entries sorted by descending count, ties by word.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<(&str, u64)> =
            self.counts.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }
}

/// Counts word frequencies over a stream of texts.
pub fn count_frequencies<'a, I>(texts: I) -> FrequencyTable
where
    I: IntoIterator<Item = &'a str>,
{
    let mut table = FrequencyTable::default();
    for text in texts {
        table.add_text(text);
    }
    table
}

/// Least-squares fit of log frequency against log rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfFit {
    pub coefficient: Real,
    pub intercept: Real,
    pub r_squared: Real,
}

/// Optional truncation of the rank-frequency curve before fitting. The
/// defaults fit every rank.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ZipfOptions {
    /// Fit only the first `max_rank` ranks when set.
    pub max_rank: Option<usize>,
    /// Drop words rarer than this count before ranking (0 or 1 keeps all).
    pub min_count: u64,
}

/// Fits the Zipf coefficient: words ranked 1..n by descending count (ties
/// by word), then OLS of ln(count) on ln(rank). Natural logarithms.
pub fn zipf_coefficient(table: &FrequencyTable) -> Result<ZipfFit> {
    zipf_coefficient_with(table, ZipfOptions::default())
}

/// [`zipf_coefficient`] with truncation options.
pub fn zipf_coefficient_with(table: &FrequencyTable, options: ZipfOptions) -> Result<ZipfFit> {
    let mut ranked = table.ranked();
    ranked.retain(|&(_, c)| c >= options.min_count.max(1));
    if let Some(max_rank) = options.max_rank {
        ranked.truncate(max_rank);
    }
    if ranked.len() < 2 {
        return Err(Error::DegenerateFrequencyTable);
    }
    let xs: Vec<Real> = (1..=ranked.len()).map(|r| (r as Real).ln()).collect();
    let ys: Vec<Real> = ranked.iter().map(|&(_, c)| (c as Real).ln()).collect();
    let fit = ols_line(&xs, &ys).ok_or(Error::DegenerateFrequencyTable)?;
    Ok(ZipfFit {
        coefficient: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub source: String,
    pub token_count: u64,
    pub percentage: Real,
}

/// Per-source token distribution, rows by descending token count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDistribution {
    pub rows: Vec<SourceRow>,
    pub total: u64,
}

impl SourceDistribution {
    /// Tab-separated rendering with two-decimal percentages and a total row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("source\ttokens\tpercent\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.2}",
                row.source, row.token_count, row.percentage
            );
        }
        let _ = writeln!(out, "total\t{}\t100.00", self.total);
        out
    }
}

/// Builds the per-source token report from a chunk stream.
pub fn source_report<'a, I>(chunks: I) -> SourceDistribution
where
    I: IntoIterator<Item = &'a Chunk>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for chunk in chunks {
        *counts.entry(chunk.source.as_str()).or_default() += chunk.token_count;
    }
    let total: u64 = counts.values().sum();
    let mut rows: Vec<SourceRow> = counts
        .into_iter()
        .map(|(source, token_count)| SourceRow {
            source: source.to_string(),
            token_count,
            percentage: if total == 0 {
                0.0
            } else {
                100.0 * token_count as Real / total as Real
            },
        })
        .collect();
    rows.sort_by(|a, b| {
        b.token_count
            .cmp(&a.token_count)
            .then_with(|| a.source.cmp(&b.source))
    });
    SourceDistribution { rows, total }
}
