//! Benchmark prompt assembly for both concepts at the three task tiers.

mod assemble;
mod template;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transforms::{MutationKind, TransformError};

pub use assemble::{assemble_cohesion_prompt, assemble_coupling_prompt, shuffle_methods, PromptContext};
pub use template::{render_template, template_file_name, PromptTemplate, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concept {
    Coupling,
    Cohesion,
}

impl Concept {
    pub const ALL: [Concept; 2] = [Concept::Coupling, Concept::Cohesion];

    pub fn as_str(self) -> &'static str {
        match self {
            Concept::Coupling => "coupling",
            Concept::Cohesion => "cohesion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Verification,
    GuidedGeneration,
    OpenEndedGeneration,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Verification, TaskKind::GuidedGeneration, TaskKind::OpenEndedGeneration];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Verification => "verification",
            TaskKind::GuidedGeneration => "guided-generation",
            TaskKind::OpenEndedGeneration => "open-ended-generation",
        }
    }
}

impl std::fmt::Display for Concept {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Expected answer, keyed by simple names as they appear in the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum PromptTruth {
    /// Verification: presented pairs and whether each is a positive.
    Assertions { pairs: Vec<(String, String)>, labels: Vec<bool> },
    /// Guided generation: entities related to the seed.
    RelatedSet { seed: String, names: BTreeSet<String> },
    /// Coupling open-ended: unordered pairs, smaller name first.
    CoupledPairs { pairs: BTreeSet<(String, String)> },
    /// Cohesion open-ended: method-name blocks.
    Partition { blocks: Vec<BTreeSet<String>> },
}

impl PromptTruth {
    /// Every name the prompt text must contain.
    pub fn entities(&self) -> BTreeSet<&str> {
        match self {
            PromptTruth::Assertions { pairs, .. } => pairs.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect(),
            PromptTruth::RelatedSet { seed, names } => {
                std::iter::once(seed.as_str()).chain(names.iter().map(String::as_str)).collect()
            }
            PromptTruth::CoupledPairs { pairs } => pairs.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect(),
            PromptTruth::Partition { blocks } => blocks.iter().flatten().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub project_id: String,
    pub record_id: String,
    /// Qualified names of the distractor classes, in prompt order.
    pub distractors: Vec<String>,
    /// Simple names of every class (coupling) or method (cohesion) in the prompt.
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub id: String,
    pub concept: Concept,
    pub task: TaskKind,
    pub transform_kind: MutationKind,
    /// Ratio in 0.1..=0.9 for coupling, source-class count 1..=9 for cohesion.
    pub distortion_requested: f64,
    pub distortion_achieved: f64,
    pub prompt: String,
    pub ground_truth: PromptTruth,
    pub token_count: usize,
    pub shuffle_seed: u64,
    pub provenance: Provenance,
}

impl PromptInstance {
    /// Integer grid coordinate of the distortion: tenths for coupling, level for cohesion.
    pub fn distortion_step(&self) -> u32 {
        match self.concept {
            Concept::Coupling => (self.distortion_requested * 10.0).round() as u32,
            Concept::Cohesion => self.distortion_requested.round() as u32,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("distortion ratio needs a nonzero class total")]
    ZeroTotal,
    #[error("{distractors} distractors exceed {total} total classes")]
    InvalidCounts { distractors: usize, total: usize },
    #[error("template placeholder `{{{0}}}` has no binding")]
    UnboundPlaceholder(String),
    #[error("ground-truth entity `{0}` missing from prompt")]
    MissingGroundTruthEntity(String),
    #[error("class {0} is too small to form the required pairs")]
    ClassTooSmall(String),
    #[error("simple name `{0}` appears twice in one prompt")]
    DuplicateName(String),
    #[error("record {0} has the wrong kind for this prompt")]
    WrongRecordKind(String),
    #[error("template: {0}")]
    Template(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Share of distractor classes among all classes shown.
pub fn distortion_ratio(n_distractors: usize, n_total: usize) -> Result<f64, PromptError> {
    if n_total == 0 {
        return Err(PromptError::ZeroTotal);
    }
    if n_distractors > n_total {
        return Err(PromptError::InvalidCounts { distractors: n_distractors, total: n_total });
    }
    Ok(n_distractors as f64 / n_total as f64)
}

/// Distractor count whose ratio is closest to `ratio` with `n_core` core classes,
/// never zero for a positive ratio. Returns the count and the ratio it achieves.
pub fn distractor_count_for(ratio: f64, n_core: usize) -> (usize, f64) {
    assert!(n_core >= 1 && (0.0..1.0).contains(&ratio), "ratio in [0,1), at least one core class");
    let exact = ratio * n_core as f64 / (1.0 - ratio);
    let mut d = exact.round() as usize;
    if d == 0 && ratio > 0.0 {
        d = 1;
    }
    (d, d as f64 / (d + n_core) as f64)
}

/// The nine requested coupling ratios, 0.1 through 0.9.
pub fn coupling_ratios() -> [f64; 9] {
    std::array::from_fn(|i| (i as f64 + 1.0) / 10.0)
}
