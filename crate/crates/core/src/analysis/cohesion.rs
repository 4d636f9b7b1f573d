use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::corpus::{ClassKind, ClassModel, MethodModel, SourceProject};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohesionReport {
    pub class_name: String,
    pub yalcom: f64,
    /// Connected components of the method graph, as method-name sets.
    pub components: Vec<BTreeSet<String>>,
}

impl CohesionReport {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }
}

/// Undirected method graph over the non-constructor methods that have bodies.
/// Two methods are adjacent when they touch a common field or one calls the other.
#[derive(Debug, Clone)]
pub struct MethodGraph<'c> {
    pub methods: Vec<&'c MethodModel>,
    pub edges: BTreeSet<(usize, usize)>,
}

pub fn method_graph(class: &ClassModel) -> MethodGraph<'_> {
    let methods: Vec<&MethodModel> = class.methods.iter().filter(|m| m.has_body()).collect();
    let mut edges = BTreeSet::new();
    for i in 0..methods.len() {
        for j in (i + 1)..methods.len() {
            let (a, b) = (methods[i], methods[j]);
            let shares_field = a.accessed_fields.intersection(&b.accessed_fields).next().is_some();
            let calls = a.invoked_methods.contains(&b.name) || b.invoked_methods.contains(&a.name);
            if shares_field || calls {
                edges.insert((i, j));
            }
        }
    }
    MethodGraph { methods, edges }
}

impl MethodGraph<'_> {
    /// Component label per method index, labels numbered in first-seen order.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.methods.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut next = 0;
        let mut root_label = std::collections::HashMap::new();
        (0..n)
            .map(|i| {
                let r = find(&mut parent, i);
                *root_label.entry(r).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    pub fn yalcom_from_components(n: usize, k: usize) -> f64 {
        if n <= 1 {
            0.0
        } else {
            (k as f64 - 1.0) / (n as f64 - 1.0)
        }
    }
}

/// YALCOM as `(components - 1) / (methods - 1)`, and 0 for a single method.
pub fn compute_yalcom(class: &ClassModel) -> Result<CohesionReport, AnalysisError> {
    let graph = method_graph(class);
    if graph.methods.is_empty() {
        return Err(AnalysisError::NoAnalyzedMethods(class.qualified_name.clone()));
    }
    let labels = graph.component_labels();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut components = vec![BTreeSet::new(); k];
    for (i, m) in graph.methods.iter().enumerate() {
        components[labels[i]].insert(m.name.clone());
    }
    Ok(CohesionReport {
        class_name: class.qualified_name.clone(),
        yalcom: MethodGraph::yalcom_from_components(graph.methods.len(), k),
        components,
    })
}

/// Fully cohesive concrete non-test classes with more than two analyzed methods.
pub fn cohesive_pool(project: &SourceProject) -> Vec<&ClassModel> {
    project
        .classes()
        .filter(|c| c.kind == ClassKind::ConcreteClass && !c.is_test)
        .filter(|c| c.methods.iter().filter(|m| m.has_body()).count() > 2)
        .filter(|c| compute_yalcom(c).is_ok_and(|r| r.yalcom == 0.0))
        .collect()
}
