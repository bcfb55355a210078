//! Multi-stage pipeline driven by a declarative TOML config.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use lexiscale_core::bpe::BpeTrainConfig;
use lexiscale_core::chunker::ChunkerConfig;
use lexiscale_core::Error;

use crate::commands::{
    encode, filter_corpus, filter_eval, fit_scaling, stats_sources, stats_zipf, train_bpe,
    EncodeOpts, FilterCorpusOpts, FilterEvalOpts, TrainBpeOpts,
};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    FilterCorpus,
    TrainBpe,
    Encode,
    Stats,
    FilterEval,
    Fit,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::FilterCorpus,
        Stage::TrainBpe,
        Stage::Encode,
        Stage::Stats,
        Stage::FilterEval,
        Stage::Fit,
    ];

    fn name(self) -> &'static str {
        match self {
            Stage::FilterCorpus => "filter-corpus",
            Stage::TrainBpe => "train-bpe",
            Stage::Encode => "encode",
            Stage::Stats => "stats",
            Stage::FilterEval => "filter-eval",
            Stage::Fit => "fit",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Stage::ALL
            .iter()
            .copied()
            .find(|stage| stage.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

fn default_bins() -> usize {
    25
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub vocab: PathBuf,
    pub corpus: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub eval: Option<PathBuf>,
    pub eval_schema: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub nonlinear: bool,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            bins: default_bins(),
            nonlinear: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub pipeline: PipelineSection,
    pub paths: PathsSection,
    pub chunker: ChunkerConfig,
    #[serde(default)]
    pub bpe: BpeTrainConfig,
    #[serde(default)]
    pub fit: FitSection,
}

impl PipelineConfig {
    /// Loads the config, resolving relative paths against the config file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::InvalidField {
                field: "config",
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.paths.vocab);
        config.paths.corpus.iter_mut().for_each(resolve);
        resolve(&mut config.paths.out_dir);
        if let Some(p) = config.paths.eval.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.paths.eval_schema.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.paths.ledger.as_mut() {
            resolve(p);
        }
        Ok(config)
    }

    /// Stages whose inputs are configured, in execution order.
    pub fn default_stages(&self) -> Vec<Stage> {
        let mut stages = vec![
            Stage::FilterCorpus,
            Stage::TrainBpe,
            Stage::Encode,
            Stage::Stats,
        ];
        if self.paths.eval.is_some() && self.paths.eval_schema.is_some() {
            stages.push(Stage::FilterEval);
        }
        if self.paths.ledger.is_some() {
            stages.push(Stage::Fit);
        }
        stages
    }

    fn out(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }
}

fn require_exists(what: &str, path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::InvalidField {
            field: "paths",
            message: format!("{what} not found: {}", path.display()),
        }
        .into());
    }
    Ok(())
}

/// Validates that every input the requested stages need exists before any
/// output is written. Stage outputs produced earlier in the run count.
fn preflight(config: &PipelineConfig, stages: &[Stage]) -> Result<()> {
    fn available(produced: &[PathBuf], path: &Path) -> bool {
        produced.iter().any(|p| p == path) || path.exists()
    }
    let mut produced: Vec<PathBuf> = Vec::new();
    for &stage in stages {
        match stage {
            Stage::FilterCorpus => {
                require_exists("vocab", &config.paths.vocab)?;
                for input in &config.paths.corpus {
                    require_exists("corpus input", input)?;
                }
                produced.push(config.out(CHUNKS));
            }
            Stage::TrainBpe => {
                let chunks = config.out(CHUNKS);
                if !available(&produced, &chunks) {
                    return Err(missing_stage_input(stage, &chunks));
                }
                produced.push(config.out(BPE_MODEL));
            }
            Stage::Encode => {
                for name in [CHUNKS, BPE_MODEL] {
                    let path = config.out(name);
                    if !available(&produced, &path) {
                        return Err(missing_stage_input(stage, &path));
                    }
                }
                produced.push(config.out(ENCODED));
            }
            Stage::Stats => {
                let chunks = config.out(CHUNKS);
                if !available(&produced, &chunks) {
                    return Err(missing_stage_input(stage, &chunks));
                }
            }
            Stage::FilterEval => {
                let eval = config
                    .paths
                    .eval
                    .as_ref()
                    .ok_or_else(|| missing_config("paths.eval"))?;
                let schema = config
                    .paths
                    .eval_schema
                    .as_ref()
                    .ok_or_else(|| missing_config("paths.eval_schema"))?;
                require_exists("eval dataset", eval)?;
                require_exists("eval schema", schema)?;
                require_exists("vocab", &config.paths.vocab)?;
            }
            Stage::Fit => {
                let ledger = config
                    .paths
                    .ledger
                    .as_ref()
                    .ok_or_else(|| missing_config("paths.ledger"))?;
                require_exists("ledger", ledger)?;
            }
        }
    }
    Ok(())
}

fn missing_stage_input(stage: Stage, path: &Path) -> anyhow::Error {
    Error::InvalidField {
        field: "stages",
        message: format!(
            "stage {stage} needs {}, which no earlier stage produces",
            path.display()
        ),
    }
    .into()
}

fn missing_config(field: &'static str) -> anyhow::Error {
    Error::InvalidField {
        field,
        message: "required by the requested stages".into(),
    }
    .into()
}

const CHUNKS: &str = "chunks.jsonl";
const BPE_MODEL: &str = "bpe_model.json";
const ENCODED: &str = "encoded.jsonl";
const FILTER_STATS: &str = "filter_stats.json";
const ZIPF: &str = "stats_zipf.json";
const SOURCES: &str = "stats_sources.json";
const EVAL_FILTERED: &str = "eval_filtered.jsonl";
const EVAL_REPORT: &str = "eval_report.json";
const SCALING: &str = "scaling_report.json";

/// Runs the requested stages in order and writes a manifest covering the
/// whole run. Returns the manifest path. `threads_override` (the --threads
/// flag or $LEXISCALE_THREADS) wins over the config's setting.
pub fn run_pipeline(
    config: &PipelineConfig,
    stages: &[Stage],
    threads_override: Option<usize>,
    manifest_path: Option<&Path>,
) -> Result<PathBuf> {
    let mut manifest = ManifestBuilder::new("pipeline run");
    manifest.config(config);

    preflight(config, stages)?;
    std::fs::create_dir_all(&config.paths.out_dir)
        .with_context(|| format!("creating {}", config.paths.out_dir.display()))?;

    let threads = threads_override.or(config.pipeline.threads).unwrap_or(0);
    let mut summaries = serde_json::Map::new();

    for &stage in stages {
        let mut stage_manifest = ManifestBuilder::new(stage.name());
        match stage {
            Stage::FilterCorpus => {
                let opts = FilterCorpusOpts {
                    vocab: config.paths.vocab.clone(),
                    inputs: config.paths.corpus.clone(),
                    out: config.out(CHUNKS),
                    stats_out: Some(config.out(FILTER_STATS)),
                    chunker: config.chunker.clone(),
                };
                filter_corpus(&opts, threads, &mut stage_manifest)?;
                manifest.output(&config.out(CHUNKS));
                manifest.output(&config.out(FILTER_STATS));
            }
            Stage::TrainBpe => {
                let opts = TrainBpeOpts {
                    input: config.out(CHUNKS),
                    out: config.out(BPE_MODEL),
                    config: config.bpe.clone(),
                };
                train_bpe(&opts, &mut stage_manifest)?;
                manifest.output(&config.out(BPE_MODEL));
            }
            Stage::Encode => {
                let opts = EncodeOpts {
                    model: config.out(BPE_MODEL),
                    input: config.out(CHUNKS),
                    out: config.out(ENCODED),
                };
                encode(&opts, threads, &mut stage_manifest)?;
                manifest.output(&config.out(ENCODED));
            }
            Stage::Stats => {
                stats_zipf(
                    &config.out(CHUNKS),
                    Default::default(),
                    Some(&config.out(ZIPF)),
                    &mut stage_manifest,
                )?;
                stats_sources(
                    &config.out(CHUNKS),
                    Some(&config.out(SOURCES)),
                    &mut stage_manifest,
                )?;
                manifest.output(&config.out(ZIPF));
                manifest.output(&config.out(SOURCES));
            }
            Stage::FilterEval => {
                let opts = FilterEvalOpts {
                    vocab: config.paths.vocab.clone(),
                    schema: config
                        .paths
                        .eval_schema
                        .clone()
                        .expect("checked in preflight"),
                    input: config.paths.eval.clone().expect("checked in preflight"),
                    out: config.out(EVAL_FILTERED),
                    report_out: Some(config.out(EVAL_REPORT)),
                };
                filter_eval(&opts, &mut stage_manifest)?;
                manifest.output(&config.out(EVAL_FILTERED));
                manifest.output(&config.out(EVAL_REPORT));
            }
            Stage::Fit => {
                fit_scaling(
                    config.paths.ledger.as_ref().expect("checked in preflight"),
                    config.fit.bins,
                    config.fit.nonlinear,
                    Some(&config.out(SCALING)),
                    &mut stage_manifest,
                )?;
                manifest.output(&config.out(SCALING));
            }
        }
        summaries.insert(stage.name().to_string(), stage_manifest.into_summary());
    }

    for input in &config.paths.corpus {
        manifest.input(input);
    }
    manifest.input(&config.paths.vocab);
    manifest.summary(&serde_json::Value::Object(summaries));

    let manifest_out = manifest_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.out("manifest.json"));
    manifest.write(&manifest_out)?;
    println!(
        "pipeline: {} stages done, manifest at {}",
        stages.len(),
        manifest_out.display()
    );
    Ok(manifest_out)
}
