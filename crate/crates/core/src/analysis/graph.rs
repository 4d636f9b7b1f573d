use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::corpus::{DependencyKind, SourceProject, TypeResolver};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub from: String,
    pub to: String,
    pub kind: DependencyKind,
}

/// Directed class-level "depends on" graph. Edges are kept in a sorted set so
/// serialization is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<DependencyEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyCluster {
    pub id: usize,
    pub members: BTreeSet<String>,
}

pub fn build_dependency_graph(project: &SourceProject) -> DependencyGraph {
    let resolver = TypeResolver::new(project);
    let mut graph = DependencyGraph::default();
    for c in project.classes() {
        graph.nodes.insert(c.qualified_name.clone());
    }
    for c in project.classes() {
        for usage in &c.type_usages {
            let Some(target) = resolver.resolve(c, &usage.name) else { continue };
            if target == c.qualified_name {
                continue;
            }
            graph.edges.insert(DependencyEdge { from: c.qualified_name.clone(), to: target, kind: usage.kind });
        }
    }
    graph
}

impl DependencyGraph {
    fn successors(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in &self.edges {
            out.entry(e.from.as_str()).or_default().insert(e.to.as_str());
        }
        out
    }

    /// True iff `to` is reachable from `from` over at least one edge.
    pub fn transitively_depends(&self, from: &str, to: &str) -> Result<bool, AnalysisError> {
        for n in [from, to] {
            if !self.nodes.contains(n) {
                return Err(AnalysisError::UnknownNode(n.to_string()));
            }
        }
        let succ = self.successors();
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&str> = succ.get(from).into_iter().flatten().copied().collect();
        while let Some(n) = queue.pop_front() {
            if n == to {
                return Ok(true);
            }
            if seen.insert(n) {
                queue.extend(succ.get(n).into_iter().flatten().copied());
            }
        }
        Ok(false)
    }

    /// Weakly connected components, numbered by their smallest member.
    pub fn clusters(&self) -> Vec<DependencyCluster> {
        let names: Vec<&String> = self.nodes.iter().collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut parent: Vec<usize> = (0..names.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (index[e.from.as_str()], index[e.to.as_str()]);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().insert((*name).clone());
        }
        groups.into_values().enumerate().map(|(id, members)| DependencyCluster { id, members }).collect()
    }

    /// `from<TAB>to<TAB>kind` lines in sorted order.
    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|e| format!("{}\t{}\t{}\n", e.from, e.to, e.kind.as_str())).collect()
    }
}

pub fn select_distractors<R: Rng + ?Sized>(
    graph: &DependencyGraph,
    mutated: &BTreeSet<String>,
    want: usize,
    rng: &mut R,
) -> Result<Vec<String>, AnalysisError> {
    select_distractors_from(graph, &graph.clusters(), mutated, want, |_| true, rng)
}

/// Picks `want` classes, each from a different weakly connected component
/// that contains none of the `mutated` classes. `eligible` filters candidate
/// members (e.g. to drop test classes); clusters with no eligible member do
/// not count as available.
pub fn select_distractors_from<R: Rng + ?Sized>(
    graph: &DependencyGraph,
    clusters: &[DependencyCluster],
    mutated: &BTreeSet<String>,
    want: usize,
    eligible: impl Fn(&str) -> bool,
    rng: &mut R,
) -> Result<Vec<String>, AnalysisError> {
    for m in mutated {
        if !graph.nodes.contains(m) {
            return Err(AnalysisError::UnknownNode(m.clone()));
        }
    }
    if want == 0 {
        return Ok(Vec::new());
    }
    let mut candidates: Vec<Vec<&String>> = clusters
        .iter()
        .filter(|c| c.members.iter().all(|m| !mutated.contains(m)))
        .map(|c| c.members.iter().filter(|m| eligible(m)).collect::<Vec<_>>())
        .filter(|members| !members.is_empty())
        .collect();
    if candidates.len() < want {
        return Err(AnalysisError::InsufficientDisjointClasses { available: candidates.len(), wanted: want });
    }
    candidates.shuffle(rng);
    Ok(candidates.into_iter().take(want).map(|members| members[rng.random_range(0..members.len())].clone()).collect())
}
