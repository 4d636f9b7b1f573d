use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tree_sitter::Node;

use super::skeleton::{object_creations_of, skeletonize};
use super::{record_id, GroundTruth, MutationKind, MutationRecord, TransformError};
use crate::analysis::InjectionSite;
use crate::corpus::{
    parse_unit, render_unit, CallableId, ClassModel, CompilationUnit, MethodModel, SourceProject, Span, SpanEdit,
    TypeHierarchy, TypeResolver,
};
use crate::syntax::{self, is_comment, named_children, text, walk};

pub const FACTORY_NAME: &str = "create";
pub const FACTORY_FALLBACK: &str = "create$gen";

pub fn apply_did(
    project: &SourceProject,
    hierarchy: &TypeHierarchy,
    site: &InjectionSite,
    seed: u64,
) -> Result<MutationRecord, TransformError> {
    apply_coupling(MutationKind::Did, project, hierarchy, site, seed)
}

pub fn apply_uid(
    project: &SourceProject,
    hierarchy: &TypeHierarchy,
    site: &InjectionSite,
    seed: u64,
) -> Result<MutationRecord, TransformError> {
    apply_coupling(MutationKind::Uid, project, hierarchy, site, seed)
}

pub fn apply_idd(
    project: &SourceProject,
    hierarchy: &TypeHierarchy,
    site: &InjectionSite,
    seed: u64,
) -> Result<MutationRecord, TransformError> {
    apply_coupling(MutationKind::Idd, project, hierarchy, site, seed)
}

/// Per-unit edit buffer in unit coordinates.
#[derive(Default)]
struct UnitEdits(BTreeMap<PathBuf, Vec<SpanEdit>>);

impl UnitEdits {
    fn push(&mut self, path: &std::path::Path, edit: SpanEdit) {
        self.0.entry(path.to_path_buf()).or_default().push(edit);
    }

    /// Class-relative span to unit-relative edit.
    fn push_in(&mut self, class: &ClassModel, span: Span, replacement: impl Into<String>) {
        self.push(&class.unit_path, SpanEdit::new(span.shift(class.decl_span.start), replacement));
    }
}

/// Picks one zero-argument-constructible, non-test implementor per abstract type.
fn choose_implementors(
    project: &SourceProject,
    hierarchy: &TypeHierarchy,
    site: &InjectionSite,
    rng: &mut impl Rng,
) -> Result<BTreeMap<String, String>, TransformError> {
    let mut chosen = BTreeMap::new();
    for p in &site.parameters {
        if chosen.contains_key(&p.abstract_type) {
            continue;
        }
        let candidates: Vec<&String> = hierarchy
            .implementors_of(&p.abstract_type)
            .filter(|c| project.class(c).is_some_and(|m| m.zero_arg_constructible() && !m.is_test))
            .collect();
        if candidates.is_empty() {
            return Err(TransformError::NoImplementor(p.abstract_type.clone()));
        }
        let pick = candidates[rng.random_range(0..candidates.len())].clone();
        chosen.insert(p.abstract_type.clone(), pick);
    }
    Ok(chosen)
}

pub fn apply_coupling(
    kind: MutationKind,
    project: &SourceProject,
    hierarchy: &TypeHierarchy,
    site: &InjectionSite,
    seed: u64,
) -> Result<MutationRecord, TransformError> {
    assert!(kind.is_coupling(), "cohesion records come from synthesize_incohesive");
    let consumer = project
        .class(&site.class_name)
        .ok_or_else(|| TransformError::Unreachable(format!("unknown class {}", site.class_name)))?;
    let callable = consumer
        .callable(&site.callable_id)
        .ok_or_else(|| TransformError::Unreachable(format!("unknown callable {}", site.callable_id)))?;
    let body =
        callable.body_span.ok_or_else(|| TransformError::Unreachable(format!("{} has no body", site.callable_id)))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = choose_implementors(project, hierarchy, site, &mut rng)?;
    let simple = |q: &str| project.class(q).map(|c| c.simple_name.clone()).unwrap_or_default();

    let mut edits = UnitEdits::default();
    let mut factories = BTreeMap::new();
    if kind == MutationKind::Idd {
        for implementor in chosen.values().collect::<BTreeSet<_>>() {
            let class = project.class(implementor).expect("chosen from project");
            let taken = class.method_names();
            let name = [FACTORY_NAME, FACTORY_FALLBACK].into_iter().find(|n| !taken.contains(n)).ok_or_else(|| {
                TransformError::NameCollision { class: implementor.clone(), name: FACTORY_FALLBACK.to_string() }
            })?;
            let s = &class.simple_name;
            let factory = format!("\n    public static {s} {name}() {{\n        return new {s}();\n    }}\n");
            let close = Span::new(class.body_span.end - 1, class.body_span.end - 1);
            edits.push_in(class, close, factory);
            factories.insert(implementor.clone(), name.to_string());
        }
    }

    let mut replaced: Vec<Span> = Vec::new();
    for p in &site.parameters {
        let implementor = &chosen[&p.abstract_type];
        let s = simple(implementor);
        let assignment = callable
            .field_assignments
            .iter()
            .find(|a| a.value_identifier.as_deref() == Some(p.name.as_str()))
            .ok_or_else(|| TransformError::Unreachable(format!("no assignment from {}", p.name)))?;
        let value = match kind {
            MutationKind::Idd => format!("{s}.{}()", factories[implementor]),
            _ => format!("new {s}()"),
        };
        edits.push_in(consumer, assignment.value_span, value);
        replaced.push(assignment.value_span);
    }

    let mutated_callable = if kind == MutationKind::Did {
        let clash =
            consumer.callables().any(|m| m.name == callable.name && m.parameters.is_empty() && m.id() != callable.id());
        if clash {
            return Err(TransformError::SignatureClash(consumer.qualified_name.clone()));
        }
        edits.push_in(consumer, callable.params_span, "()");
        rewrite_parameter_uses(consumer, callable, body, site, &replaced, &mut edits);
        repair_call_sites(project, consumer, callable, &mut edits);
        CallableId::new(&callable.name, &[])
    } else {
        callable.id()
    };

    add_imports(project, consumer, chosen.values(), &mut edits);

    let mut edited_units = BTreeMap::new();
    let mut reparsed: BTreeMap<String, ClassModel> = BTreeMap::new();
    for (path, unit_edits) in &edits.0 {
        let unit = project.unit(path).expect("edits target project units");
        let out = render_unit(unit, unit_edits)?;
        for c in parse_unit(path, &out)? {
            reparsed.insert(c.qualified_name.clone(), c);
        }
        edited_units.insert(path.clone(), out);
    }
    let after = |q: &str| reparsed.get(q).or_else(|| project.class(q)).expect("class survives edits");

    let new_consumer = after(&consumer.qualified_name);
    let new_callable = new_consumer
        .callable(&mutated_callable)
        .ok_or_else(|| TransformError::PostconditionViolated(format!("{mutated_callable} missing after edit")))?;
    check_postconditions(kind, consumer, callable, new_consumer, new_callable, &chosen, project)?;

    let mut prompt_classes = BTreeMap::new();
    prompt_classes.insert(
        new_consumer.qualified_name.clone(),
        skeletonize(new_consumer, &BTreeSet::from([mutated_callable.clone()]))?,
    );
    for implementor in chosen.values() {
        let class = after(implementor);
        let keep: BTreeSet<CallableId> =
            factories.get(implementor).map(|n| CallableId::new(n, &[])).into_iter().collect();
        prompt_classes.insert(implementor.clone(), skeletonize(class, &keep)?);
    }

    let mut touched = vec![consumer.qualified_name.clone()];
    for c in chosen.values() {
        if !touched.contains(c) {
            touched.push(c.clone());
        }
    }
    Ok(MutationRecord {
        id: record_id(kind, seed),
        kind,
        project_id: project.id.clone(),
        touched_classes: touched,
        consumer: Some(consumer.qualified_name.clone()),
        site: Some(site.callable_id.clone()),
        mutated_callable: Some(mutated_callable),
        ground_truth: GroundTruth::coupled(chosen.values().map(|c| (consumer.qualified_name.clone(), c.clone()))),
        chosen_implementations: chosen,
        factory_methods: factories,
        edited_units,
        prompt_classes,
        generated_class: None,
        rng_seed: seed,
    })
}

fn check_postconditions(
    kind: MutationKind,
    consumer: &ClassModel,
    callable: &MethodModel,
    new_consumer: &ClassModel,
    new_callable: &MethodModel,
    chosen: &BTreeMap<String, String>,
    project: &SourceProject,
) -> Result<(), TransformError> {
    let fail = |m: String| Err(TransformError::PostconditionViolated(m));
    match kind {
        MutationKind::Did if !new_callable.parameters.is_empty() => {
            fail(format!("{} still has parameters", new_callable.id()))
        }
        MutationKind::Uid
            if callable.params_span.slice(&consumer.text) != new_callable.params_span.slice(&new_consumer.text) =>
        {
            fail(format!("{} signature changed", callable.id()))
        }
        MutationKind::Idd => {
            let names: BTreeSet<&str> =
                chosen.values().filter_map(|q| project.class(q)).map(|c| c.simple_name.as_str()).collect();
            match object_creations_of(&new_consumer.text)
                .into_iter()
                .find(|(t, _)| names.contains(t.rsplit('.').next().unwrap_or(t)))
            {
                Some((t, _)) => fail(format!("{} still instantiates {t}", new_consumer.qualified_name)),
                None => Ok(()),
            }
        }
        _ => Ok(()),
    }
}

/// After DID removes the parameters, any remaining use of one reads the field it was stored in.
fn rewrite_parameter_uses(
    consumer: &ClassModel,
    callable: &MethodModel,
    body: Span,
    site: &InjectionSite,
    replaced: &[Span],
    edits: &mut UnitEdits,
) {
    let tree = syntax::parse(&consumer.text);
    let src = consumer.text.as_str();
    walk(tree.root_node(), |n| {
        let (s, e) = (n.start_byte(), n.end_byte());
        if e <= body.start || s >= body.end {
            return false;
        }
        if replaced.iter().any(|r| r.start <= s && e <= r.end) {
            return false;
        }
        if n.kind() != "identifier" {
            return true;
        }
        let name = text(n, src);
        let Some(field) = site.assignment_map.get(name) else { return true };
        if !callable.parameters.iter().any(|p| p.name == name) || !is_plain_reference(n) {
            return true;
        }
        edits.push_in(consumer, Span::new(s, e), format!("this.{field}"));
        true
    });
}

fn is_plain_reference(n: Node<'_>) -> bool {
    let Some(p) = n.parent() else { return true };
    let named = |f: &str| p.child_by_field_name(f) == Some(n);
    match p.kind() {
        "field_access" => !named("field"),
        "method_invocation" => !named("name"),
        "variable_declarator" | "formal_parameter" | "catch_formal_parameter" => !named("name"),
        "lambda_expression" | "inferred_parameters" | "labeled_statement" => false,
        _ => true,
    }
}

fn argument_count(args: Node<'_>) -> usize {
    named_children(args).into_iter().filter(|c| !is_comment(*c)).count()
}

fn enclosing(unit: &CompilationUnit, offset: usize) -> Option<&ClassModel> {
    unit.classes
        .iter()
        .find(|c| c.decl_span.start <= offset && offset < c.decl_span.end)
        .or_else(|| unit.classes.first())
}

/// Calls of the DID-mutated callable inside the project now pass no arguments.
fn repair_call_sites(project: &SourceProject, consumer: &ClassModel, callable: &MethodModel, edits: &mut UnitEdits) {
    let resolver = TypeResolver::new(project);
    let arity = callable.parameters.len();
    let is_ctor = callable.return_type_name.is_none();
    for unit in &project.units {
        let tree = syntax::parse(&unit.text);
        let src = unit.text.as_str();
        walk(tree.root_node(), |n| {
            let Some(args) = n.child_by_field_name("arguments") else { return true };
            if argument_count(args) != arity {
                return true;
            }
            let Some(owner) = enclosing(unit, n.start_byte()) else { return true };
            let targets_consumer =
                |name: &str| resolver.resolve(owner, name).as_deref() == Some(consumer.qualified_name.as_str());
            let hit = match n.kind() {
                "object_creation_expression" if is_ctor => n
                    .child_by_field_name("type")
                    .is_some_and(|t| targets_consumer(&crate::corpus::parse::base_type_name(t, src))),
                "explicit_constructor_invocation" if is_ctor => {
                    match n.child_by_field_name("constructor").map(|c| c.kind()) {
                        Some("this") => owner.qualified_name == consumer.qualified_name,
                        Some("super") => owner.supertype_names.iter().any(|s| targets_consumer(s)),
                        _ => false,
                    }
                }
                "method_invocation" if !is_ctor => {
                    n.child_by_field_name("name").is_some_and(|m| text(m, src) == callable.name)
                }
                _ => false,
            };
            if hit {
                edits.push(&unit.path, SpanEdit::new(Span::new(args.start_byte(), args.end_byte()), "()"));
                return false;
            }
            true
        });
    }
}

/// Imports the chosen implementors into the consumer's unit when they live elsewhere.
fn add_imports<'a>(
    project: &SourceProject,
    consumer: &ClassModel,
    implementors: impl Iterator<Item = &'a String>,
    edits: &mut UnitEdits,
) {
    let Some(unit) = project.unit_of(consumer) else { return };
    let mut needed = BTreeSet::new();
    for q in implementors {
        let Some(class) = project.class(q) else { continue };
        let Some(pkg) = &class.package else { continue };
        if consumer.package.as_ref() == Some(pkg) || consumer.imports.iter().any(|i| i == q || *i == format!("{pkg}.*"))
        {
            continue;
        }
        needed.insert(q.clone());
    }
    if needed.is_empty() {
        return;
    }
    let tree = syntax::parse(&unit.text);
    let anchor = named_children(tree.root_node())
        .into_iter()
        .rfind(|n| matches!(n.kind(), "import_declaration" | "package_declaration"));
    let lines: String = needed.iter().map(|q| format!("import {q};")).collect::<Vec<_>>().join("\n");
    match anchor {
        Some(a) => edits.push(&unit.path, SpanEdit::insert(a.end_byte(), format!("\n{lines}"))),
        None => edits.push(&unit.path, SpanEdit::insert(0, format!("{lines}\n"))),
    }
}
