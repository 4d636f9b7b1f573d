//! Static facts the transformations depend on.

mod cohesion;
mod graph;
mod injection;

use thiserror::Error;

pub use crate::corpus::DependencyKind;
pub use cohesion::{cohesive_pool, compute_yalcom, method_graph, CohesionReport, MethodGraph};
pub use graph::{
    build_dependency_graph, select_distractors, select_distractors_from, DependencyCluster, DependencyEdge,
    DependencyGraph,
};
pub use injection::{find_injection_sites, InjectionSite, SiteParameter};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("unknown class in dependency graph: {0}")]
    UnknownNode(String),
    #[error("class {0} has no analyzable methods")]
    NoAnalyzedMethods(String),
    #[error("only {available} disjoint classes available, {wanted} requested")]
    InsufficientDisjointClasses { available: usize, wanted: usize },
}
