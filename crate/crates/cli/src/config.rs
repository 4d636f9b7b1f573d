//! Flat TOML run configuration.

use std::path::{Path, PathBuf};

use designprobe_core::llmclient::{MockMode, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::StageError;

/// Every key is optional in the file; the defaults below apply.
///
/// | key | default |
/// |---|---|
/// | `corpus_paths` | `["corpus"]`, each entry one project root |
/// | `master_seed` | `42` |
/// | `n_per_source` | `2` methods per cohesion source class, 1..=5 |
/// | `coupling_ratios` | `[0.1, ..., 0.9]` |
/// | `cohesion_levels` | `[1, ..., 9]` |
/// | `cohesion_variants` | `2` synthesized classes per (target, level) |
/// | `per_cell` | `100` |
/// | `verification_pairs` | `2` positives (and negatives) per verification prompt |
/// | `template_dir` | unset: built-in templates |
/// | `output_dir` | `"out"` |
/// | `mock` | unset; `oracle`, `random` or `silent` replaces the HTTP model |
/// | `emit_graph` | `false` |
/// | `model_name` | `"local-model"` |
/// | `endpoint` | `"http://localhost:8000/v1/chat/completions"` |
/// | `api_key_env` | `"DESIGNPROBE_API_KEY"` |
/// | `max_generation_tokens` | `32768` |
/// | `request_timeout_secs` | `600` |
/// | `max_in_flight` | `4` |
/// | `rate_limit_per_minute` | `0` (unlimited) |
///
/// Relative paths in a config file resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_paths: Vec<PathBuf>,
    pub master_seed: u64,
    pub n_per_source: usize,
    pub coupling_ratios: Vec<f64>,
    pub cohesion_levels: Vec<usize>,
    pub cohesion_variants: usize,
    pub per_cell: usize,
    pub verification_pairs: usize,
    pub template_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub mock: Option<MockMode>,
    pub emit_graph: bool,
    pub model_name: String,
    pub endpoint: String,
    pub api_key_env: String,
    pub max_generation_tokens: u32,
    pub request_timeout_secs: u64,
    pub max_in_flight: usize,
    pub rate_limit_per_minute: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_paths: vec![PathBuf::from("corpus")],
            master_seed: 42,
            n_per_source: 2,
            coupling_ratios: designprobe_core::promptgen::coupling_ratios().to_vec(),
            cohesion_levels: (1..=9).collect(),
            cohesion_variants: 2,
            per_cell: 100,
            verification_pairs: 2,
            template_dir: None,
            output_dir: PathBuf::from("out"),
            mock: None,
            emit_graph: false,
            model_name: "local-model".into(),
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            api_key_env: "DESIGNPROBE_API_KEY".into(),
            max_generation_tokens: 32768,
            request_timeout_secs: 600,
            max_in_flight: 4,
            rate_limit_per_minute: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, StageError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| StageError::ConfigInvalid(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        cfg.corpus_paths.iter_mut().for_each(rebase);
        rebase(&mut cfg.output_dir);
        if let Some(t) = cfg.template_dir.as_mut() {
            rebase(t);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, StageError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| StageError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), StageError> {
        let bad = |msg: String| Err(StageError::ConfigInvalid(msg));
        if self.corpus_paths.is_empty() {
            return bad("corpus_paths is empty".into());
        }
        for r in &self.coupling_ratios {
            let tenths = r * 10.0;
            if !(0.1..=0.9 + 1e-9).contains(r) || (tenths - tenths.round()).abs() > 1e-9 {
                return bad(format!("coupling ratio {r} is not one of 0.1, 0.2, ..., 0.9"));
            }
        }
        if let Some(l) = self.cohesion_levels.iter().find(|l| !(1..=9).contains(*l)) {
            return bad(format!("cohesion level {l} outside 1..=9"));
        }
        if !(1..=5).contains(&self.n_per_source) {
            return bad(format!("n_per_source {} outside 1..=5", self.n_per_source));
        }
        if self.per_cell == 0 || self.verification_pairs == 0 {
            return bad("per_cell and verification_pairs must be positive".into());
        }
        self.model_spec().validate().map_err(StageError::ConfigInvalid)
    }

    /// The model actually queried: the mock's name when a mock is set.
    pub fn model_spec(&self) -> ModelSpec {
        let model_name = match self.mock {
            Some(MockMode::Oracle) => "mock-oracle".into(),
            Some(MockMode::Random) => "mock-random".into(),
            Some(MockMode::Silent) => "mock-silent".into(),
            None => self.model_name.clone(),
        };
        ModelSpec {
            model_name,
            endpoint: self.endpoint.clone(),
            api_key_env: self.api_key_env.clone(),
            max_generation_tokens: self.max_generation_tokens,
            request_timeout_secs: self.request_timeout_secs,
            max_in_flight: self.max_in_flight,
            rate_limit_per_minute: self.rate_limit_per_minute,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

pub(crate) fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    hex::encode(Sha256::digest(bytes))
}
