//! Stage-by-stage pipeline driver. Stages talk only through files in the
//! output directory; `manifest.json` records what produced each file.

pub mod artifacts;
pub mod config;
mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use designprobe_core::llmclient::MockMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::PipelineConfig;
pub use stages::ProjectAnalysis;

#[derive(Debug, Error)]
pub enum StageError {
    #[error("missing inputs: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingInputs(Vec<PathBuf>),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::ConfigInvalid(_) => 2,
            StageError::MissingInputs(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Analyze,
    Mutate,
    GenPrompts,
    Sample,
    Infer,
    Evaluate,
    TraceStats,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Analyze,
        Stage::Mutate,
        Stage::GenPrompts,
        Stage::Sample,
        Stage::Infer,
        Stage::Evaluate,
        Stage::TraceStats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Analyze => "analyze",
            Stage::Mutate => "mutate",
            Stage::GenPrompts => "gen-prompts",
            Stage::Sample => "sample",
            Stage::Infer => "infer",
            Stage::Evaluate => "evaluate",
            Stage::TraceStats => "trace-stats",
        }
    }

    /// Bumped whenever a stage's output format or algorithm changes.
    fn version(self) -> u32 {
        1
    }

    fn inputs(self) -> &'static [&'static str] {
        use artifacts::*;
        match self {
            Stage::Ingest => &[],
            Stage::Analyze => &[CORPUS],
            Stage::Mutate => &[CORPUS, ANALYSIS],
            Stage::GenPrompts => &[CORPUS, ANALYSIS, MUTATIONS],
            Stage::Sample => &[PROMPTS],
            Stage::Infer => &[SAMPLE],
            Stage::Evaluate => &[SAMPLE, RESPONSES],
            Stage::TraceStats => &[SAMPLE, RESPONSES],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub version: u32,
    pub config_hash: String,
    pub master_seed: u64,
    pub input_hash: String,
    /// False when a rerun could still change the outputs (e.g. failed requests).
    pub complete: bool,
    /// File name → SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(out_dir: &Path) -> Result<Self, StageError> {
        let path = out_dir.join(artifacts::MANIFEST);
        if path.exists() {
            artifacts::read_json(&path)
        } else {
            Ok(Manifest::default())
        }
    }

    fn save(&self, out_dir: &Path) -> Result<(), StageError> {
        let tmp = out_dir.join(format!("{}.tmp", artifacts::MANIFEST));
        artifacts::write_json(&tmp, self)?;
        std::fs::rename(tmp, out_dir.join(artifacts::MANIFEST))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    UpToDate,
}

/// What a stage body reports back to the driver.
pub(crate) struct StageProduct {
    pub outputs: Vec<&'static str>,
    pub complete: bool,
    pub summary: String,
}

/// Runs one stage, or does nothing when its inputs and settings match the
/// manifest and its outputs are untouched.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<StageOutcome, StageError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let missing: Vec<PathBuf> = stage.inputs().iter().map(|f| out.join(f)).filter(|p| !p.exists()).collect();
    if !missing.is_empty() {
        return Err(StageError::MissingInputs(missing));
    }
    std::fs::create_dir_all(out)?;

    let mut hasher = Sha256::new();
    hasher.update(stage.name());
    hasher.update(stage.version().to_le_bytes());
    hasher.update(stages::settings_fingerprint(stage, cfg)?);
    for f in stage.inputs() {
        hasher.update(f);
        hasher.update(artifacts::file_sha256(&out.join(f))?);
    }
    let input_hash = hex::encode(hasher.finalize());

    let mut manifest = Manifest::load(out)?;
    if let Some(prev) = manifest.stages.get(stage.name()) {
        let untouched = prev.outputs.iter().all(|(f, h)| {
            let p = out.join(f);
            p.exists() && artifacts::file_sha256(&p).is_ok_and(|cur| &cur == h)
        });
        if prev.complete && prev.input_hash == input_hash && prev.version == stage.version() && untouched {
            tracing::info!(stage = stage.name(), "up to date");
            return Ok(StageOutcome::UpToDate);
        }
    }

    tracing::info!(stage = stage.name(), "running");
    let product = stages::run(stage, cfg)?;
    let mut outputs = BTreeMap::new();
    for f in &product.outputs {
        outputs.insert(f.to_string(), artifacts::file_sha256(&out.join(f))?);
    }
    manifest.config_hash = cfg.hash();
    manifest.master_seed = cfg.master_seed;
    manifest.stages.insert(
        stage.name().to_string(),
        StageRecord {
            version: stage.version(),
            config_hash: cfg.hash(),
            master_seed: cfg.master_seed,
            input_hash,
            complete: product.complete,
            outputs,
        },
    );
    manifest.save(out)?;
    tracing::info!(stage = stage.name(), "{}", product.summary);
    Ok(StageOutcome::Ran)
}

pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<(Stage, StageOutcome)>, StageError> {
    Stage::ALL.iter().map(|&s| run_stage(s, cfg).map(|o| (s, o))).collect()
}

#[derive(Debug, Parser)]
#[command(name = "designprobe", version, about = "Coupling and cohesion benchmark pipeline for Java corpora")]
pub struct Cli {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replace the HTTP model with a local mock: oracle, random or silent.
    #[arg(long, global = true)]
    pub mock: Option<MockMode>,
    /// Prompts drawn per sampling cell, overriding the config.
    #[arg(long = "per-cell", global = true)]
    pub per_cell: Option<usize>,
    /// Also write the dependency edge list during `analyze`.
    #[arg(long = "emit-graph", global = true)]
    pub emit_graph: bool,
    /// Project root to ingest; repeatable, replaces `corpus_paths`.
    #[arg(long = "corpus", global = true)]
    pub corpus: Vec<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse every project root into corpus.json.
    Ingest,
    /// Dependency graph, injection sites, cohesion metric and cohesive pool.
    Analyze,
    /// Coupling mutations (DID, UID, IDD) and synthesized incohesive classes.
    Mutate,
    /// Prompts for both concepts, three tasks and every distortion step.
    GenPrompts,
    /// Stratified draw over task x distortion x length bin.
    Sample,
    /// Query the model (or mock) for every sampled prompt; resumable.
    Infer,
    /// Per-prompt F1/ARI scores and report.csv.
    Evaluate,
    /// Reasoning-trace length and entity coverage.
    TraceStats,
    /// Every stage in order.
    RunAll,
}

impl Cli {
    pub fn config(&self) -> Result<PipelineConfig, StageError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if self.mock.is_some() {
            cfg.mock = self.mock;
        }
        if let Some(n) = self.per_cell {
            cfg.per_cell = n;
        }
        if self.emit_graph {
            cfg.emit_graph = true;
        }
        if !self.corpus.is_empty() {
            cfg.corpus_paths = self.corpus.clone();
        }
        Ok(cfg)
    }

    pub fn execute(&self) -> Result<(), StageError> {
        let cfg = self.config()?;
        let stages: Vec<Stage> = match self.command {
            Command::Ingest => vec![Stage::Ingest],
            Command::Analyze => vec![Stage::Analyze],
            Command::Mutate => vec![Stage::Mutate],
            Command::GenPrompts => vec![Stage::GenPrompts],
            Command::Sample => vec![Stage::Sample],
            Command::Infer => vec![Stage::Infer],
            Command::Evaluate => vec![Stage::Evaluate],
            Command::TraceStats => vec![Stage::TraceStats],
            Command::RunAll => Stage::ALL.to_vec(),
        };
        for stage in stages {
            let outcome = run_stage(stage, &cfg)?;
            println!("{}: {}", stage.name(), if outcome == StageOutcome::Ran { "done" } else { "up to date" });
        }
        Ok(())
    }
}
