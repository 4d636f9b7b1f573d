//! Source-level mutations that plant coupling and cohesion defects with known ground truth.

mod cohesion;
mod coupling;
mod skeleton;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CallableId, RenderError};
use crate::syntax::SyntaxError;

pub use cohesion::{synthesize_incohesive, CohesionInjectionConfig};
pub use coupling::{apply_coupling, apply_did, apply_idd, apply_uid, FACTORY_FALLBACK, FACTORY_NAME};
pub use skeleton::{
    count_object_creations, object_creations_of, prepare_distractor, remove_comments, skeletonize, strip_instantiations,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MutationKind {
    Did,
    Uid,
    Idd,
    Cohesion,
}

impl MutationKind {
    pub const COUPLING: [MutationKind; 3] = [MutationKind::Did, MutationKind::Uid, MutationKind::Idd];

    pub fn as_str(self) -> &'static str {
        match self {
            MutationKind::Did => "DID",
            MutationKind::Uid => "UID",
            MutationKind::Idd => "IDD",
            MutationKind::Cohesion => "COHESION",
        }
    }

    pub fn is_coupling(self) -> bool {
        self != MutationKind::Cohesion
    }
}

impl std::fmt::Display for MutationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionBlock {
    /// Qualified name of the class the methods came from.
    pub origin: String,
    pub methods: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum GroundTruth {
    /// Unordered pairs of qualified class names, stored with the smaller name first.
    CoupledPairs {
        pairs: BTreeSet<(String, String)>,
    },
    MethodPartition {
        blocks: Vec<PartitionBlock>,
    },
}

impl GroundTruth {
    pub fn coupled(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        GroundTruth::CoupledPairs { pairs: pairs.into_iter().map(|(a, b)| canonical_pair(a, b)).collect() }
    }

    /// Distinct pair members and nonempty, disjoint blocks.
    pub fn is_well_formed(&self) -> bool {
        match self {
            GroundTruth::CoupledPairs { pairs } => pairs.iter().all(|(a, b)| a < b),
            GroundTruth::MethodPartition { blocks } => {
                let mut seen = BTreeSet::new();
                blocks.iter().all(|b| !b.methods.is_empty() && b.methods.iter().all(|m| seen.insert(m)))
            }
        }
    }
}

pub fn canonical_pair(a: String, b: String) -> (String, String) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// One applied transformation and everything needed to build prompts from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub id: String,
    pub kind: MutationKind,
    pub project_id: String,
    pub touched_classes: Vec<String>,
    /// The class that received the injection site (coupling kinds).
    pub consumer: Option<String>,
    pub site: Option<CallableId>,
    /// Identity of the site callable after the edit.
    pub mutated_callable: Option<CallableId>,
    /// Abstract type → chosen concrete implementor.
    pub chosen_implementations: BTreeMap<String, String>,
    /// Concrete class → name of the injected static factory (IDD only).
    pub factory_methods: BTreeMap<String, String>,
    pub edited_units: BTreeMap<PathBuf, String>,
    /// Qualified name → prompt-ready declaration text (skeletonized, comment-free).
    pub prompt_classes: BTreeMap<String, String>,
    pub generated_class: Option<String>,
    pub ground_truth: GroundTruth,
    pub rng_seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("no zero-argument-constructible implementor of {0}")]
    NoImplementor(String),
    #[error("site precondition violated: {0}")]
    Unreachable(String),
    #[error("mutated signature would clash with an existing callable in {0}")]
    SignatureClash(String),
    #[error("{class} already declares `{name}`")]
    NameCollision { class: String, name: String },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("{class} has {available} methods, {wanted} requested")]
    InsufficientMethods { class: String, available: usize, wanted: usize },
    #[error("distortion level {0} outside 1..=9")]
    InvalidLevel(usize),
    #[error("postcondition violated: {0}")]
    PostconditionViolated(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("reparse failed: {0}")]
    Syntax(#[from] SyntaxError),
}

/// `GeneratedClass` followed by eight lowercase hex digits.
pub fn random_class_name<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!("GeneratedClass{:08x}", rng.random::<u32>())
}

pub(crate) fn record_id(kind: MutationKind, seed: u64) -> String {
    format!("{}-{:016x}", kind.as_str().to_ascii_lowercase(), seed)
}
