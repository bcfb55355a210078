//! `lexiscale`: vocabulary-restricted corpus preparation, BPE tokenization,
//! corpus statistics, model accounting, and scaling-law fitting.

mod commands;
mod manifest;
mod outputs;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lexiscale_core::chunker::{ChunkerConfig, OovBudget};
use lexiscale_core::corpus_stats::ZipfOptions;
use lexiscale_core::model_math::ModelConfig;
use lexiscale_core::{Error, ErrorKind};

use commands::*;
use manifest::ManifestBuilder;
use pipeline::{run_pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(
    name = "lexiscale",
    version,
    about = "Reduced-scale language-modeling data toolkit"
)]
struct Cli {
    /// Write a run manifest (config, digests, summary) to this path
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,

    /// Worker threads for document-parallel stages
    /// (default: $LEXISCALE_THREADS, then one per core)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vocabulary utilities
    Vocab {
        #[command(subcommand)]
        command: VocabCommand,
    },
    /// Filter a JSONL corpus into vocabulary-constrained chunks
    FilterCorpus(FilterCorpusArgs),
    /// Keep only evaluation examples whose every word is in-vocabulary
    FilterEval(FilterEvalArgs),
    /// Train a byte-level BPE tokenizer on chunk text
    TrainBpe(TrainBpeArgs),
    /// Encode text or chunks with a trained tokenizer
    Encode(EncodeArgs),
    /// Corpus statistics over chunk files
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
    /// Parameter and FLOPs accounting
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
    /// Power-law fitting over training-run ledgers
    Fit {
        #[command(subcommand)]
        command: FitCommand,
    },
    /// Multi-stage runs driven by a config file
    Pipeline {
        #[command(subcommand)]
        command: PipelineCommand,
    },
}

#[derive(Subcommand)]
enum VocabCommand {
    /// Print the size and a sample of a vocabulary file
    Inspect {
        path: PathBuf,
        /// Sample words to show
        #[arg(long, default_value_t = 10)]
        sample: usize,
    },
}

#[derive(Args)]
struct FilterCorpusArgs {
    /// Vocabulary file (one word per line, '#' comments)
    #[arg(long)]
    vocab: PathBuf,
    /// Minimum tokens a chunk must accumulate to be emitted
    #[arg(long)]
    min_tokens: u64,
    /// OOV budget as a decimal or fraction (e.g. 0.015 or 3/200)
    #[arg(long, default_value = "0.015", value_parser = parse_budget)]
    oov_budget: OovBudget,
    /// Keep a below-minimum chunk at the end of a document
    #[arg(long)]
    keep_short_tail: bool,
    /// Input JSONL files ({"id","source","text"}; .zst accepted)
    #[arg(long = "in", required = true, num_args = 1.., value_name = "PATH")]
    inputs: Vec<PathBuf>,
    /// Output chunk JSONL
    #[arg(long)]
    out: PathBuf,
    /// Where to write FilterStats JSON
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct FilterEvalArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// Task schema JSON: {"task": name, "text_fields": [..]}
    #[arg(long)]
    schema: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the FilterReport JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TrainBpeArgs {
    /// Chunk JSONL to train on
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 15_000)]
    vocab_size: usize,
    /// Special tokens to reserve (repeat; default <|bos|> <|eos|> <|pad|>)
    #[arg(long = "special-token")]
    special_tokens: Vec<String>,
    /// Output model JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    /// Trained model JSON
    #[arg(long)]
    model: PathBuf,
    /// Input: chunk JSONL (by extension) or plain text, one record per line
    #[arg(long = "in")]
    input: PathBuf,
    /// Output ids JSONL: {"id", "ids"}
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Zipf coefficient of the chunk text (log-log least squares)
    Zipf {
        #[arg(long = "in")]
        input: PathBuf,
        /// Fit only the first N ranks
        #[arg(long)]
        max_rank: Option<usize>,
        /// Drop words rarer than this count before ranking
        #[arg(long, default_value_t = 0)]
        min_count: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-source token distribution (TSV and JSON)
    Sources {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Parameter count for one configuration
    Params {
        #[arg(long)]
        hidden: u64,
        #[arg(long)]
        layers: u64,
        #[arg(long)]
        intermediate: u64,
        #[arg(long, default_value_t = 15_000)]
        vocab: u64,
    },
    /// Training FLOPs: 6 · params · tokens
    Flops {
        #[arg(long)]
        params: u64,
        #[arg(long)]
        tokens: u64,
    },
    /// Emit the 18-row reference table and check it reproduces
    Sweep {
        #[arg(long, default_value_t = 15_000)]
        vocab: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum FitCommand {
    /// Frontier selection over FLOPs bins plus per-axis power laws
    Scaling {
        /// Run ledger: CSV (run_id,params,tokens,flops,eval_loss) or JSONL
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long, default_value_t = 25)]
        bins: usize,
        /// Refine each fit by nonlinear least squares in linear space
        #[arg(long)]
        nonlinear: bool,
        /// Where to write the report JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Run configured stages in order
    Run {
        /// Pipeline TOML config
        #[arg(long)]
        config: PathBuf,
        /// Stages to run, in order (default: all configured; an empty list
        /// validates the config and writes a manifest without running)
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        stages: Option<Vec<Stage>>,
    },
}

fn thread_override(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("LEXISCALE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = thread_override(cli.threads).unwrap_or(0);
    let mut manifest;
    match cli.command {
        Command::Vocab {
            command: VocabCommand::Inspect { path, sample },
        } => {
            manifest = ManifestBuilder::new("vocab inspect");
            vocab_inspect(&path, sample, &mut manifest)?;
        }
        Command::FilterCorpus(args) => {
            manifest = ManifestBuilder::new("filter-corpus");
            let opts = FilterCorpusOpts {
                vocab: args.vocab,
                inputs: args.inputs,
                out: args.out,
                stats_out: args.stats,
                chunker: ChunkerConfig {
                    min_tokens: args.min_tokens,
                    oov_budget: args.oov_budget,
                    drop_short_tail: !args.keep_short_tail,
                },
            };
            filter_corpus(&opts, threads, &mut manifest)?;
        }
        Command::FilterEval(args) => {
            manifest = ManifestBuilder::new("filter-eval");
            let opts = FilterEvalOpts {
                vocab: args.vocab,
                schema: args.schema,
                input: args.input,
                out: args.out,
                report_out: args.report,
            };
            filter_eval(&opts, &mut manifest)?;
        }
        Command::TrainBpe(args) => {
            manifest = ManifestBuilder::new("train-bpe");
            let mut config = lexiscale_core::bpe::BpeTrainConfig {
                vocab_size: args.vocab_size,
                ..Default::default()
            };
            if !args.special_tokens.is_empty() {
                config.special_tokens = args.special_tokens;
            }
            let opts = TrainBpeOpts {
                input: args.input,
                out: args.out,
                config,
            };
            train_bpe(&opts, &mut manifest)?;
        }
        Command::Encode(args) => {
            manifest = ManifestBuilder::new("encode");
            let opts = EncodeOpts {
                model: args.model,
                input: args.input,
                out: args.out,
            };
            encode(&opts, threads, &mut manifest)?;
        }
        Command::Stats { command } => match command {
            StatsCommand::Zipf {
                input,
                max_rank,
                min_count,
                out,
            } => {
                manifest = ManifestBuilder::new("stats zipf");
                let options = ZipfOptions {
                    max_rank,
                    min_count,
                };
                stats_zipf(&input, options, out.as_deref(), &mut manifest)?;
            }
            StatsCommand::Sources { input, out } => {
                manifest = ManifestBuilder::new("stats sources");
                stats_sources(&input, out.as_deref(), &mut manifest)?;
            }
        },
        Command::Model { command } => match command {
            ModelCommand::Params {
                hidden,
                layers,
                intermediate,
                vocab,
            } => {
                manifest = ManifestBuilder::new("model params");
                let config = ModelConfig {
                    vocab_size: vocab,
                    ..ModelConfig::with_shape(hidden, layers, intermediate)
                };
                model_params(&config, &mut manifest)?;
            }
            ModelCommand::Flops { params, tokens } => {
                manifest = ManifestBuilder::new("model flops");
                model_flops(params, tokens, &mut manifest)?;
            }
            ModelCommand::Sweep { vocab, json } => {
                manifest = ManifestBuilder::new("model sweep");
                model_sweep(vocab, json, &mut manifest)?;
            }
        },
        Command::Fit { command } => match command {
            FitCommand::Scaling {
                ledger,
                bins,
                nonlinear,
                out,
            } => {
                manifest = ManifestBuilder::new("fit scaling");
                fit_scaling(&ledger, bins, nonlinear, out.as_deref(), &mut manifest)?;
            }
        },
        Command::Pipeline { command } => match command {
            PipelineCommand::Run { config, stages } => {
                let config = PipelineConfig::load(&config)?;
                let stages = stages.unwrap_or_else(|| config.default_stages());
                run_pipeline(
                    &config,
                    &stages,
                    thread_override(cli.threads),
                    cli.manifest.as_deref(),
                )?;
                return Ok(());
            }
        },
    }
    if let Some(path) = &cli.manifest {
        manifest.write(path)?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<Error>() {
            return match core.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Io => 4,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
