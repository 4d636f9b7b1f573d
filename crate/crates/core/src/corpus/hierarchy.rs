use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ClassKind, ClassModel, SourceProject};

/// Resolves names as written in a class to project-local qualified names.
///
/// Lookup order: exact qualified match, explicit single-type import, same
/// package, wildcard import, then a globally unique simple name.
#[derive(Debug, Clone)]
pub struct TypeResolver {
    by_qualified: HashMap<String, ClassKind>,
    by_simple: HashMap<String, Vec<String>>,
}

impl TypeResolver {
    pub fn new(project: &SourceProject) -> Self {
        let mut by_qualified = HashMap::new();
        let mut by_simple: HashMap<String, Vec<String>> = HashMap::new();
        for c in project.classes() {
            by_qualified.insert(c.qualified_name.clone(), c.kind);
            by_simple.entry(c.simple_name.clone()).or_default().push(c.qualified_name.clone());
        }
        for v in by_simple.values_mut() {
            v.sort();
        }
        TypeResolver { by_qualified, by_simple }
    }

    pub fn kind(&self, qualified: &str) -> Option<ClassKind> {
        self.by_qualified.get(qualified).copied()
    }

    pub fn resolve(&self, from: &ClassModel, name: &str) -> Option<String> {
        let name = name.trim_end_matches("...").trim_end_matches("[]");
        if name.is_empty() || from.nested_types.iter().any(|n| n == name) {
            return None;
        }
        if name.contains('.') {
            if self.by_qualified.contains_key(name) {
                return Some(name.to_string());
            }
            let first = name.split('.').next().unwrap_or(name);
            if first.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                // `Outer.Inner`: a member type depends on its enclosing class
                return self.resolve(from, first);
            }
            // package-qualified member type: the longest project type prefix
            return self
                .by_qualified
                .keys()
                .filter(|q| name.starts_with(&format!("{q}.")))
                .max_by_key(|q| q.len())
                .cloned();
        }
        let simple = name;
        let candidates = self.by_simple.get(simple)?;
        for imp in &from.imports {
            if imp.rsplit('.').next() == Some(simple) && candidates.contains(imp) {
                return Some(imp.clone());
            }
        }
        let same_pkg = match &from.package {
            Some(p) => format!("{p}.{simple}"),
            None => simple.to_string(),
        };
        if candidates.contains(&same_pkg) {
            return Some(same_pkg);
        }
        for imp in &from.imports {
            if let Some(pkg) = imp.strip_suffix(".*") {
                let q = format!("{pkg}.{simple}");
                if candidates.contains(&q) {
                    return Some(q);
                }
            }
        }
        if candidates.len() == 1 {
            return Some(candidates[0].clone());
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TypeHierarchy {
    /// Qualified name → ancestors in breadth-first order, `Object` excluded.
    /// Types outside the project appear as opaque leaves under their written name.
    pub ancestors: BTreeMap<String, Vec<String>>,
    /// Interface/abstract class → concrete project classes below it.
    pub implementors: BTreeMap<String, BTreeSet<String>>,
    pub kinds: BTreeMap<String, ClassKind>,
}

impl TypeHierarchy {
    pub fn ancestors_of(&self, qualified: &str) -> &[String] {
        self.ancestors.get(qualified).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn implementors_of(&self, qualified: &str) -> impl Iterator<Item = &String> {
        self.implementors.get(qualified).into_iter().flatten()
    }

    pub fn kind(&self, qualified: &str) -> Option<ClassKind> {
        self.kinds.get(qualified).copied()
    }

    pub fn shares_ancestor(&self, a: &str, b: &str) -> bool {
        let left: BTreeSet<&String> = self.ancestors_of(a).iter().collect();
        self.ancestors_of(b).iter().any(|x| left.contains(x))
            || self.ancestors_of(a).iter().any(|x| x == b)
            || self.ancestors_of(b).iter().any(|x| x == a)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("cyclic inheritance: {}", .0.join(" -> "))]
    CyclicInheritance(Vec<String>),
}

fn is_root(name: &str) -> bool {
    name == "Object" || name == "java.lang.Object"
}

pub fn resolve_hierarchy(project: &SourceProject) -> Result<TypeHierarchy, HierarchyError> {
    let resolver = TypeResolver::new(project);
    let mut direct: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut kinds = BTreeMap::new();
    for c in project.classes() {
        kinds.insert(c.qualified_name.clone(), c.kind);
        let supers = c
            .supertype_names
            .iter()
            .chain(c.interface_names.iter())
            .filter(|n| !is_root(n))
            .map(|n| resolver.resolve(c, n).unwrap_or_else(|| n.clone()))
            .collect();
        direct.insert(c.qualified_name.clone(), supers);
    }

    detect_cycle(&direct)?;

    let mut ancestors = BTreeMap::new();
    let mut implementors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for name in direct.keys() {
        let mut order = Vec::new();
        let mut seen = BTreeSet::new();
        let mut queue: std::collections::VecDeque<String> = direct[name].iter().cloned().collect();
        while let Some(next) = queue.pop_front() {
            if !seen.insert(next.clone()) {
                continue;
            }
            if let Some(up) = direct.get(&next) {
                queue.extend(up.iter().cloned());
            }
            order.push(next);
        }
        if kinds.get(name) == Some(&ClassKind::ConcreteClass) {
            for a in &order {
                if kinds.get(a).is_some_and(|k| k.is_abstract_type()) {
                    implementors.entry(a.clone()).or_default().insert(name.clone());
                }
            }
        }
        ancestors.insert(name.clone(), order);
    }
    Ok(TypeHierarchy { ancestors, implementors, kinds })
}

fn detect_cycle(direct: &BTreeMap<String, Vec<String>>) -> Result<(), HierarchyError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit(
        node: &str,
        direct: &BTreeMap<String, Vec<String>>,
        marks: &mut HashMap<String, Mark>,
        path: &mut Vec<String>,
    ) -> Result<(), HierarchyError> {
        match marks.get(node) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Open) => {
                let start = path.iter().position(|p| p == node).unwrap_or(0);
                let mut cycle = path[start..].to_vec();
                cycle.push(node.to_string());
                return Err(HierarchyError::CyclicInheritance(cycle));
            }
            None => {}
        }
        marks.insert(node.to_string(), Mark::Open);
        path.push(node.to_string());
        for up in direct.get(node).into_iter().flatten() {
            if direct.contains_key(up) {
                visit(up, direct, marks, path)?;
            }
        }
        path.pop();
        marks.insert(node.to_string(), Mark::Done);
        Ok(())
    }
    let mut marks = HashMap::new();
    for name in direct.keys() {
        visit(name, direct, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}
