//! Subcommand implementations.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use lexiscale_core::bpe::{pre_tokenize, BpeModel, BpeTrainConfig, TokenId};
use lexiscale_core::chunker::{
    chunk_batch, Chunk, ChunkerConfig, DocRecord, FilterStats, OovBudget,
};
use lexiscale_core::corpus_stats::{
    count_frequencies, source_report, zipf_coefficient_with, ZipfOptions,
};
use lexiscale_core::eval_filter::{filter_eval_lines, TaskSchema};
use lexiscale_core::io::{jsonl_records, open_reader, read_jsonl, LineWriter};
use lexiscale_core::model_math::{
    count_params, format_hundredths, reference_table, reported_size_hundredths, ModelConfig,
    RunCost,
};
use lexiscale_core::scaling::{fit_all_with, load_ledger};
use lexiscale_core::vocabulary::Vocabulary;
use lexiscale_core::Error;

use crate::manifest::ManifestBuilder;
use crate::outputs::{write_json, write_text, StagedFile};

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")
}

// ---------------------------------------------------------------------------
// vocab inspect
// ---------------------------------------------------------------------------

pub fn vocab_inspect(path: &Path, sample: usize, manifest: &mut ManifestBuilder) -> Result<()> {
    let vocab = Vocabulary::load(path)?;
    let mut words: Vec<&str> = vocab.iter().collect();
    words.sort_unstable();
    println!("vocabulary: {}", path.display());
    println!("size: {}", vocab.size());
    let shown: Vec<&str> = words.iter().copied().take(sample).collect();
    println!("sample: {}", shown.join(" "));
    manifest.input(path);
    manifest.summary(&serde_json::json!({ "size": vocab.size() }));
    Ok(())
}

// ---------------------------------------------------------------------------
// filter-corpus
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FilterCorpusOpts {
    pub vocab: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub stats_out: Option<PathBuf>,
    pub chunker: ChunkerConfig,
}

pub fn filter_corpus(
    opts: &FilterCorpusOpts,
    threads: usize,
    manifest: &mut ManifestBuilder,
) -> Result<()> {
    opts.chunker.validate()?;
    let vocab = Vocabulary::load(&opts.vocab)?;
    let pool = thread_pool(threads)?;

    let staged = StagedFile::plan(&opts.out)?;
    let mut writer = LineWriter::create(staged.tmp())?;
    let mut stats = FilterStats::default();

    for input in &opts.inputs {
        manifest.input(input);
        let reader = open_reader(input)?;
        let mut batch: Vec<DocRecord> = Vec::with_capacity(BATCH);
        let flush = |batch: &mut Vec<DocRecord>,
                     stats: &mut FilterStats,
                     writer: &mut LineWriter|
         -> Result<()> {
            let results = pool.install(|| chunk_batch(batch, &vocab, &opts.chunker));
            for (doc, dc) in batch.iter().zip(&results) {
                stats.record(&doc.source, dc);
                for chunk in &dc.chunks {
                    writer.write_json(chunk)?;
                }
            }
            batch.clear();
            Ok(())
        };
        for item in jsonl_records::<DocRecord>(reader, input) {
            match item {
                Ok(doc) => {
                    batch.push(doc);
                    if batch.len() >= BATCH {
                        flush(&mut batch, &mut stats, &mut writer)?;
                    }
                }
                Err(Error::Parse { .. }) => stats.skipped += 1,
                Err(e) => return Err(e.into()),
            }
        }
        flush(&mut batch, &mut stats, &mut writer)?;
    }
    writer.finish()?;
    staged.commit()?;

    if let Some(stats_path) = &opts.stats_out {
        write_json(stats_path, &stats)?;
        manifest.output(stats_path);
    }
    println!(
        "filter-corpus: {} -> {} ({} chunks, {}/{} tokens retained, {} skipped records)",
        opts.inputs.len(),
        opts.out.display(),
        stats.chunks(),
        stats.retained_tokens(),
        stats.input_tokens(),
        stats.skipped
    );
    manifest.input(&opts.vocab);
    manifest.output(&opts.out);
    manifest.config(opts);
    manifest.summary(&stats);
    Ok(())
}

const BATCH: usize = 1024;

// ---------------------------------------------------------------------------
// filter-eval
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FilterEvalOpts {
    pub vocab: PathBuf,
    pub schema: PathBuf,
    pub input: PathBuf,
    pub out: PathBuf,
    pub report_out: Option<PathBuf>,
}

pub fn filter_eval(opts: &FilterEvalOpts, manifest: &mut ManifestBuilder) -> Result<()> {
    let vocab = Vocabulary::load(&opts.vocab)?;
    let schema = TaskSchema::load(&opts.schema)?;

    let mut lines = Vec::new();
    for line in open_reader(&opts.input)?.lines() {
        lines.push(line.map_err(|e| Error::Io {
            path: opts.input.clone(),
            source: e,
        })?);
    }
    let (kept, report) = filter_eval_lines(&vocab, &schema, lines.iter().map(String::as_str));

    let staged = StagedFile::plan(&opts.out)?;
    let mut writer = LineWriter::create(staged.tmp())?;
    for line in kept {
        writer.write_line(line)?;
    }
    writer.finish()?;
    staged.commit()?;

    if let Some(report_path) = &opts.report_out {
        write_json(report_path, &report)?;
        manifest.output(report_path);
    }
    println!(
        "filter-eval[{}]: kept {}/{} examples ({} dropped, {} malformed)",
        schema.task, report.kept, report.total, report.dropped, report.malformed
    );
    manifest.input(&opts.vocab);
    manifest.input(&opts.schema);
    manifest.input(&opts.input);
    manifest.output(&opts.out);
    manifest.config(opts);
    manifest.summary(&report);
    Ok(())
}

// ---------------------------------------------------------------------------
// train-bpe / encode
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TrainBpeOpts {
    pub input: PathBuf,
    pub out: PathBuf,
    pub config: BpeTrainConfig,
}

pub fn train_bpe(opts: &TrainBpeOpts, manifest: &mut ManifestBuilder) -> Result<()> {
    let chunks: Vec<Chunk> = read_jsonl(&opts.input)?;
    let model = BpeModel::train(chunks.iter().map(|c| c.text.as_str()), opts.config.clone())?;
    write_text(&opts.out, &model.to_json())?;
    println!(
        "train-bpe: {} chunks -> {} ({} merges, vocab {})",
        chunks.len(),
        opts.out.display(),
        model.merges().len(),
        model.vocab_len()
    );
    manifest.input(&opts.input);
    manifest.output(&opts.out);
    manifest.config(opts);
    manifest.summary(&serde_json::json!({
        "merges": model.merges().len(),
        "vocab_len": model.vocab_len(),
    }));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodeOpts {
    pub model: PathBuf,
    pub input: PathBuf,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EncodedRecord {
    id: String,
    ids: Vec<TokenId>,
}

/// Encodes with a per-batch cache of unique pre-tokens.
fn encode_cached(
    model: &BpeModel,
    cache: &mut HashMap<String, Vec<TokenId>>,
    text: &str,
) -> Vec<TokenId> {
    let mut ids = Vec::new();
    for pretoken in pre_tokenize(text) {
        match cache.get(pretoken) {
            Some(cached) => ids.extend_from_slice(cached),
            None => {
                let encoded = model.encode(pretoken);
                ids.extend_from_slice(&encoded);
                cache.insert(pretoken.to_string(), encoded);
            }
        }
    }
    ids
}

pub fn encode(opts: &EncodeOpts, threads: usize, manifest: &mut ManifestBuilder) -> Result<()> {
    let model = BpeModel::load(&opts.model)?;
    let pool = thread_pool(threads)?;

    let is_jsonl = opts
        .input
        .file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.contains(".jsonl"));
    let records: Vec<(String, String)> = if is_jsonl {
        let chunks: Vec<Chunk> = read_jsonl(&opts.input)?;
        chunks
            .into_iter()
            .enumerate()
            .map(|(i, c)| (format!("{}#{}", c.doc_id, i), c.text))
            .collect()
    } else {
        let mut lines = Vec::new();
        for line in open_reader(&opts.input)?.lines() {
            lines.push(line.map_err(|e| Error::Io {
                path: opts.input.clone(),
                source: e,
            })?);
        }
        lines
            .into_iter()
            .enumerate()
            .map(|(i, text)| (format!("line-{i}"), text))
            .collect()
    };

    let encoded: Vec<EncodedRecord> = pool.install(|| {
        records
            .par_chunks(256)
            .flat_map_iter(|batch| {
                let mut cache = HashMap::new();
                batch
                    .iter()
                    .map(|(id, text)| EncodedRecord {
                        id: id.clone(),
                        ids: encode_cached(&model, &mut cache, text),
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    });

    let staged = StagedFile::plan(&opts.out)?;
    let mut writer = LineWriter::create(staged.tmp())?;
    let mut total_tokens = 0u64;
    for record in &encoded {
        total_tokens += record.ids.len() as u64;
        writer.write_json(record)?;
    }
    writer.finish()?;
    staged.commit()?;

    println!(
        "encode: {} records -> {} ({} tokens)",
        encoded.len(),
        opts.out.display(),
        total_tokens
    );
    manifest.input(&opts.model);
    manifest.input(&opts.input);
    manifest.output(&opts.out);
    manifest.config(opts);
    manifest.summary(&serde_json::json!({
        "records": encoded.len(),
        "tokens": total_tokens,
    }));
    Ok(())
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

pub fn stats_zipf(
    input: &Path,
    options: ZipfOptions,
    out: Option<&Path>,
    manifest: &mut ManifestBuilder,
) -> Result<()> {
    let chunks: Vec<Chunk> = read_jsonl(input)?;
    let table = count_frequencies(chunks.iter().map(|c| c.text.as_str()));
    let fit = zipf_coefficient_with(&table, options)?;
    let report = serde_json::json!({
        "coefficient": fit.coefficient,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "distinct_words": table.distinct_words(),
        "total_tokens": table.total_tokens(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = out {
        write_json(path, &report)?;
        manifest.output(path);
    }
    manifest.input(input);
    manifest.config(&options);
    manifest.summary(&report);
    Ok(())
}

pub fn stats_sources(
    input: &Path,
    out: Option<&Path>,
    manifest: &mut ManifestBuilder,
) -> Result<()> {
    let chunks: Vec<Chunk> = read_jsonl(input)?;
    let distribution = source_report(chunks.iter());
    print!("{}", distribution.to_tsv());
    println!("{}", serde_json::to_string_pretty(&distribution)?);
    if let Some(path) = out {
        write_json(path, &distribution)?;
        manifest.output(path);
    }
    manifest.input(input);
    manifest.summary(&distribution);
    Ok(())
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

pub fn model_params(config: &ModelConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let params = count_params(config)?;
    println!("{}", serde_json::to_string_pretty(&params)?);
    manifest.config(config);
    manifest.summary(&params);
    Ok(())
}

pub fn model_flops(params: u64, tokens: u64, manifest: &mut ManifestBuilder) -> Result<()> {
    let cost = RunCost::new(params, tokens);
    println!("{}", serde_json::to_string_pretty(&cost)?);
    manifest.summary(&cost);
    Ok(())
}

#[derive(Serialize)]
pub struct SweepRow {
    pub hidden_size: u64,
    pub num_layers: u64,
    pub intermediate_size: u64,
    pub params_exact: u64,
    pub reported_millions: String,
    pub reference_millions: String,
    pub matches: bool,
}

pub fn sweep_rows(vocab_size: u64) -> Vec<SweepRow> {
    reference_table()
        .iter()
        .map(|row| {
            let config = ModelConfig {
                vocab_size,
                ..ModelConfig::with_shape(row.hidden_size, row.num_layers, row.intermediate_size)
            };
            let exact = count_params(&config).expect("reference config valid").total;
            let reported =
                reported_size_hundredths(row.hidden_size, row.num_layers, row.intermediate_size);
            SweepRow {
                hidden_size: row.hidden_size,
                num_layers: row.num_layers,
                intermediate_size: row.intermediate_size,
                params_exact: exact,
                reported_millions: format_hundredths(reported),
                reference_millions: format_hundredths(row.reported_hundredths),
                matches: reported == row.reported_hundredths,
            }
        })
        .collect()
}

pub fn model_sweep(vocab_size: u64, json: bool, manifest: &mut ManifestBuilder) -> Result<()> {
    let rows = sweep_rows(vocab_size);
    if json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        println!(
            "hidden\tlayers\tintermediate\tparams@{vocab_size}\treported_m\treference_m\tmatch"
        );
        for r in &rows {
            println!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.hidden_size,
                r.num_layers,
                r.intermediate_size,
                r.params_exact,
                r.reported_millions,
                r.reference_millions,
                if r.matches { "yes" } else { "NO" }
            );
        }
    }
    let all_match = rows.iter().all(|r| r.matches);
    manifest.summary(&serde_json::json!({ "rows": rows.len(), "all_match": all_match }));
    if !all_match {
        return Err(Error::InvalidField {
            field: "sweep",
            message: "reported sizes diverge from the reference table".into(),
        }
        .into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// fit scaling
// ---------------------------------------------------------------------------

pub fn fit_scaling(
    ledger: &Path,
    bins: usize,
    nonlinear: bool,
    out: Option<&Path>,
    manifest: &mut ManifestBuilder,
) -> Result<()> {
    let records = load_ledger(ledger)?;
    let report = fit_all_with(&records, bins, nonlinear)?;
    for fit in [&report.fits.flops, &report.fits.data, &report.fits.model] {
        println!(
            "{:?}: A = {:.6e}, B = {:+.6}, R² = {:.4}",
            fit.axis, fit.a, fit.b, fit.r_squared
        );
    }
    println!(
        "frontier: {} points from {} runs over {} bins",
        report.frontier.points.len(),
        report.n_records,
        report.n_bins
    );
    if let Some(path) = out {
        write_json(path, &report)?;
        manifest.output(path);
    }
    manifest.input(ledger);
    manifest.config(&serde_json::json!({ "bins": bins, "nonlinear": nonlinear }));
    manifest.summary(&report.fits);
    Ok(())
}

pub fn parse_budget(s: &str) -> std::result::Result<OovBudget, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
