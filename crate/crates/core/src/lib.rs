//! Building blocks for a coupling/cohesion benchmark over Java corpora.
//!
//! The crate covers the whole path from source to score:
//!
//! * [`corpus`] parses Java projects into a class-level model with byte spans.
//! * [`analysis`] derives the dependency graph, injection sites, YALCOM and
//!   the disjoint clusters used for distractors.
//! * [`transforms`] applies the DID/UID/IDD coupling mutations, synthesizes
//!   in-cohesive classes, and skeletonizes code for presentation.
//! * [`promptgen`] and [`sampling`] build the tiered prompt pool and draw the
//!   stratified sample.
//! * [`llmclient`] talks to a chat-completions endpoint (or a mock model).
//! * [`evaluation`] and [`traces`] score answers and summarize reasoning traces.

pub mod analysis;
pub mod corpus;
pub mod evaluation;
pub mod llmclient;
pub mod promptgen;
pub mod sampling;
pub mod seed;
pub mod syntax;
pub mod traces;
pub mod transforms;

#[cfg(test)]
mod testutil;

pub use analysis::{CohesionReport, DependencyCluster, DependencyGraph, DependencyKind, InjectionSite};
pub use corpus::{ClassKind, ClassModel, CompilationUnit, FieldModel, MethodModel, SourceProject, Span, TypeHierarchy};
pub use evaluation::{ScoreRecord, StratumReport};
pub use llmclient::{InferenceResult, ModelSpec, ParsedAnswer};
pub use promptgen::{Concept, PromptInstance, TaskKind};
pub use sampling::SamplingGrid;
pub use traces::TraceStats;
pub use transforms::{GroundTruth, MutationKind, MutationRecord};
