use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{CallableId, ClassModel, MethodModel, SourceProject, TypeHierarchy, TypeResolver};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteParameter {
    pub name: String,
    /// Declared type as written.
    pub type_name: String,
    /// Qualified project type (an interface or abstract class).
    pub abstract_type: String,
}

/// A constructor or setter that receives every dependency through an
/// abstract-typed parameter and stores it verbatim in a same-typed field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionSite {
    pub class_name: String,
    pub callable_id: CallableId,
    pub is_constructor: bool,
    pub parameters: Vec<SiteParameter>,
    /// parameter name → field name
    pub assignment_map: BTreeMap<String, String>,
}

pub fn find_injection_sites(project: &SourceProject, hierarchy: &TypeHierarchy) -> Vec<InjectionSite> {
    let resolver = TypeResolver::new(project);
    let mut sites = Vec::new();
    for class in project.classes().filter(|c| !c.is_test) {
        for ctor in &class.constructors {
            if let Some(site) = check_callable(class, ctor, true, &resolver, hierarchy) {
                sites.push(site);
            }
        }
        for method in class.methods.iter().filter(|m| m.has_body() && !m.modifiers.is_static) {
            if let Some(site) = check_callable(class, method, false, &resolver, hierarchy) {
                sites.push(site);
            }
        }
    }
    sites
}

fn check_callable(
    class: &ClassModel,
    callable: &MethodModel,
    is_constructor: bool,
    resolver: &TypeResolver,
    hierarchy: &TypeHierarchy,
) -> Option<InjectionSite> {
    if callable.parameters.is_empty() {
        return None;
    }
    // Setter-style sites must consist of nothing but the injecting assignments.
    if !is_constructor
        && (callable.body_statement_count != callable.parameters.len()
            || callable.field_assignments.len() != callable.parameters.len())
    {
        return None;
    }
    let mut parameters = Vec::new();
    let mut assignment_map = BTreeMap::new();
    let mut targets = BTreeSet::new();
    for p in &callable.parameters {
        let abstract_type = resolver.resolve(class, &p.base_type)?;
        if !hierarchy.kind(&abstract_type)?.is_abstract_type() {
            return None;
        }
        hierarchy.implementors_of(&abstract_type).next()?;
        let mut assigned =
            callable.field_assignments.iter().filter(|a| a.value_identifier.as_deref() == Some(p.name.as_str()));
        let assignment = assigned.next()?;
        if assigned.next().is_some() {
            return None;
        }
        let field = class.field(&assignment.field)?;
        if field.declared_type_name != p.type_name || !targets.insert(field.name.clone()) {
            return None;
        }
        assignment_map.insert(p.name.clone(), field.name.clone());
        parameters.push(SiteParameter { name: p.name.clone(), type_name: p.type_name.clone(), abstract_type });
    }
    Some(InjectionSite {
        class_name: class.qualified_name.clone(),
        callable_id: callable.id(),
        is_constructor,
        parameters,
        assignment_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::resolve_hierarchy;
    use crate::testutil::project;

    fn sites(sources: &[&str]) -> Vec<InjectionSite> {
        let p = project(sources);
        let h = resolve_hierarchy(&p).unwrap();
        find_injection_sites(&p, &h)
    }

    const REPO: &str = "interface Repo { String get(); }";
    const SQL: &str = "class SqlRepo implements Repo { public String get() { return \"\"; } }";

    #[test]
    fn constructor_site() {
        let found = sites(&[REPO, SQL, "class Service { private Repo repo; Service(Repo r) { this.repo = r; } }"]);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].class_name, "Service");
        assert_eq!(found[0].callable_id.as_str(), "Service(Repo)");
        assert!(found[0].is_constructor);
        assert_eq!(found[0].assignment_map, BTreeMap::from([("r".into(), "repo".into())]));
        assert_eq!(found[0].parameters[0].abstract_type, "Repo");
    }

    #[test]
    fn mixed_parameters_excluded() {
        let found = sites(&[
            REPO,
            SQL,
            "class Service { Repo repo; int max; Service(Repo r, int max) { this.repo = r; this.max = max; } }",
        ]);
        assert!(found.is_empty());
    }

    #[test]
    fn no_implementor_excluded() {
        let found = sites(&[REPO, "class Service { Repo repo; Service(Repo r) { repo = r; } }"]);
        assert!(found.is_empty());
    }

    #[test]
    fn setter_sites_must_be_pure_assignments() {
        let found = sites(&[
            REPO,
            SQL,
            "abstract class Sink { abstract void put(String s); }",
            "class FileSink extends Sink { void put(String s) {} }",
            "class Service { Repo repo; Sink sink;\n\
               void setRepo(Repo r) { this.repo = r; }\n\
               void setSink(Sink s) { this.sink = s; System.out.println(s); }\n\
               void setBoth(Repo r, Sink s) { repo = r; sink = s; }\n\
             }",
        ]);
        let ids: Vec<_> = found.iter().map(|s| s.callable_id.as_str()).collect();
        assert_eq!(ids, ["setRepo(Repo)", "setBoth(Repo,Sink)"]);
        assert!(found.iter().all(|s| !s.is_constructor));
    }

    #[test]
    fn type_mismatch_and_double_assignment_excluded() {
        let found = sites(&[
            REPO,
            SQL,
            "class A { Object repo; A(Repo r) { this.repo = r; } }",
            "class B { Repo one; Repo two; B(Repo r) { one = r; two = r; } }",
            "class C { Repo one; C(Repo r, Repo s) { one = r; one = s; } }",
        ]);
        assert!(found.is_empty(), "{found:?}");
    }
}
