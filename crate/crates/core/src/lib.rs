//! Reduced-scale language-modeling data toolkit.
//!
//! This crate covers the data side of training small causal language models
//! on vocabulary-restricted text:
//!
//! - [`vocabulary`]: a restricted word list with case-insensitive membership
//!   and word-level tokenization (letters / integers / symbols / OOV).
//! - [`chunker`]: sentence-granular corpus filtering that accumulates chunks
//!   under a minimum token count and an exact-rational OOV budget.
//! - [`eval_filter`]: zero-OOV filtering of downstream evaluation sets,
//!   driven by a per-task field schema.
//! - [`bpe`]: byte-level BPE training, encoding, and decoding with
//!   deterministic merge selection.
//! - [`corpus_stats`]: word-frequency tables, the Zipf coefficient, and
//!   per-source token distribution reports.
//! - [`model_math`]: parameter counting for LLaMA-style configurations,
//!   6·N·D training FLOPs with embeddings included, perplexity, and rotary
//!   position embeddings with position interpolation.
//! - [`scaling`]: run-ledger ingestion, compute-optimal frontier selection
//!   over log-uniform FLOPs bins, and log-log power-law fitting.
//!
//! The numeric kernels ([`linfit`], the rotation in [`model_math`]) are
//! generic over [`num::Scalar`]; everything else uses the crate-level
//! [`Real`] alias.

pub mod bpe;
pub mod chunker;
pub mod corpus_stats;
pub mod error;
pub mod eval_filter;
pub mod io;
pub mod linfit;
pub mod model_math;
pub mod num;
pub mod scaling;
pub mod vocabulary;

/// Concrete scalar used by the domain types.
pub type Real = f64;

pub use bpe::{BpeModel, BpeTrainConfig};
pub use chunker::{Chunk, ChunkerConfig, DocRecord, FilterStats, OovBudget};
pub use error::{Error, ErrorKind, Result};
pub use model_math::{ModelConfig, ParamCount, RopeConfig, RunCost};
pub use scaling::{Frontier, PowerLawFit, RunRecord, ScalingReport};
pub use vocabulary::{TokenClass, Vocabulary, WordToken};
