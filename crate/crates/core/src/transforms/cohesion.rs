use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::skeleton::remove_comments;
use super::{random_class_name, record_id, GroundTruth, MutationKind, MutationRecord, PartitionBlock, TransformError};
use crate::analysis::{compute_yalcom, method_graph};
use crate::corpus::{
    apply_edits, parse_class_text, ClassModel, FieldModel, MethodModel, Span, SpanEdit, TypeHierarchy,
};
use crate::syntax::{self, text, walk};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohesionInjectionConfig {
    /// Number of source classes, 1..=9.
    pub distortion_level: usize,
    /// Methods drawn from each source class.
    pub n_per_source: usize,
    pub rng_seed: u64,
}

impl CohesionInjectionConfig {
    pub const DEFAULT_N: usize = 2;

    pub fn new(distortion_level: usize, rng_seed: u64) -> Self {
        CohesionInjectionConfig { distortion_level, n_per_source: Self::DEFAULT_N, rng_seed }
    }
}

struct Group<'c> {
    origin: &'c ClassModel,
    methods: Vec<&'c MethodModel>,
    fields: Vec<&'c FieldModel>,
}

impl Group<'_> {
    fn defined(&self) -> BTreeSet<&str> {
        self.methods.iter().map(|m| m.name.as_str()).chain(self.fields.iter().map(|f| f.name.as_str())).collect()
    }
}

/// Clones `target` under a random name and injects `n_per_source` methods (plus
/// the fields they touch) from each source class.
pub fn synthesize_incohesive(
    project_id: &str,
    target: &ClassModel,
    sources: &[&ClassModel],
    cfg: &CohesionInjectionConfig,
    hierarchy: &TypeHierarchy,
) -> Result<MutationRecord, TransformError> {
    let level = cfg.distortion_level;
    if !(1..=9).contains(&level) {
        return Err(TransformError::InvalidLevel(level));
    }
    if sources.len() != level {
        return Err(TransformError::PreconditionViolation(format!(
            "{} source classes for level {level}",
            sources.len()
        )));
    }
    let all: Vec<&ClassModel> = std::iter::once(target).chain(sources.iter().copied()).collect();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if a.qualified_name == b.qualified_name {
                return Err(TransformError::PreconditionViolation(format!("{} used twice", a.qualified_name)));
            }
            if hierarchy.shares_ancestor(&a.qualified_name, &b.qualified_name) {
                return Err(TransformError::PreconditionViolation(format!(
                    "{} and {} share an ancestor",
                    a.qualified_name, b.qualified_name
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let name = random_class_name(&mut rng);

    let mut groups = vec![Group {
        origin: target,
        methods: target.methods.iter().filter(|m| m.has_body()).collect(),
        fields: target.fields.iter().collect(),
    }];
    for source in sources {
        let analyzed: Vec<&MethodModel> = source.methods.iter().filter(|m| m.has_body()).collect();
        if analyzed.len() < cfg.n_per_source {
            return Err(TransformError::InsufficientMethods {
                class: source.qualified_name.clone(),
                available: analyzed.len(),
                wanted: cfg.n_per_source,
            });
        }
        let mut picked = rand::seq::index::sample(&mut rng, analyzed.len(), cfg.n_per_source).into_vec();
        picked.sort_unstable();
        let methods: Vec<&MethodModel> = picked.into_iter().map(|i| analyzed[i]).collect();
        let used: BTreeSet<&str> = methods.iter().flat_map(|m| m.accessed_fields.iter().map(String::as_str)).collect();
        let fields = source.fields.iter().filter(|f| used.contains(f.name.as_str())).collect();
        groups.push(Group { origin: source, methods, fields });
    }

    check_isolation(&groups, target)?;

    let mut fragments = String::new();
    for g in &groups[1..] {
        for f in &g.fields {
            fragments.push_str("\n    ");
            fragments.push_str(&retarget(&f.standalone_text, &g.origin.simple_name, &name)?);
        }
        for m in &g.methods {
            fragments.push_str("\n\n    ");
            fragments.push_str(&retarget(m.decl_span.slice(&g.origin.text), &g.origin.simple_name, &name)?);
        }
    }
    fragments.push('\n');

    let tree = syntax::parse(&target.text);
    let mut edits = rename_edits(tree.root_node(), &target.text, &target.simple_name, &name);
    edits.push(SpanEdit::insert(target.body_span.end - 1, fragments));
    let generated_text = apply_edits(&target.text, &edits)?;
    let generated = parse_class_text(&generated_text)?;

    let blocks: Vec<PartitionBlock> = groups
        .iter()
        .map(|g| PartitionBlock {
            origin: g.origin.qualified_name.clone(),
            methods: g.methods.iter().map(|m| m.name.clone()).collect(),
        })
        .collect();
    verify_generated(&generated, &blocks, level)?;

    let mut prompt_classes = BTreeMap::new();
    prompt_classes.insert(name.clone(), remove_comments(&generated_text)?);
    let mut edited_units = BTreeMap::new();
    edited_units.insert(PathBuf::from(format!("generated/{name}.java")), generated_text);

    Ok(MutationRecord {
        id: record_id(MutationKind::Cohesion, cfg.rng_seed),
        kind: MutationKind::Cohesion,
        project_id: project_id.to_string(),
        touched_classes: all.iter().map(|c| c.qualified_name.clone()).collect(),
        consumer: None,
        site: None,
        mutated_callable: None,
        chosen_implementations: BTreeMap::new(),
        factory_methods: BTreeMap::new(),
        edited_units,
        prompt_classes,
        generated_class: Some(name),
        ground_truth: GroundTruth::MethodPartition { blocks },
        rng_seed: cfg.rng_seed,
    })
}

/// No two groups define the same member name, and no group's code names a
/// member defined by another group.
fn check_isolation(groups: &[Group<'_>], target: &ClassModel) -> Result<(), TransformError> {
    let defined: Vec<BTreeSet<&str>> = groups.iter().map(Group::defined).collect();
    for (i, g) in groups.iter().enumerate() {
        for (j, other) in defined.iter().enumerate().skip(i + 1) {
            if let Some(n) = defined[i].intersection(other).next() {
                return Err(TransformError::NameCollision {
                    class: groups[j].origin.qualified_name.clone(),
                    name: n.to_string(),
                });
            }
        }
        let code: Vec<&MethodModel> = if i == 0 { target.callables().collect() } else { g.methods.clone() };
        let referenced: BTreeSet<&str> = code
            .iter()
            .flat_map(|m| {
                m.free_identifiers.iter().chain(&m.invoked_methods).chain(&m.accessed_fields).map(String::as_str)
            })
            .collect();
        for (j, other) in defined.iter().enumerate() {
            if j == i {
                continue;
            }
            if let Some(n) = referenced.intersection(other).next() {
                return Err(TransformError::PreconditionViolation(format!(
                    "{} refers to `{n}` defined by {}",
                    g.origin.qualified_name, groups[j].origin.qualified_name
                )));
            }
        }
    }
    Ok(())
}

fn rename_edits(root: tree_sitter::Node<'_>, src: &str, from: &str, to: &str) -> Vec<SpanEdit> {
    let mut edits = Vec::new();
    walk(root, |n| {
        if matches!(n.kind(), "identifier" | "type_identifier") && text(n, src) == from {
            edits.push(SpanEdit::new(Span::new(n.start_byte(), n.end_byte()), to));
        }
        true
    });
    edits
}

/// Renames self-references of the origin class inside a member fragment and drops
/// `@Override`, which no longer overrides anything in the generated class.
fn retarget(member: &str, origin: &str, to: &str) -> Result<String, TransformError> {
    const OPEN: &str = "class __Wrap {\n";
    let wrapped = format!("{OPEN}{member}\n}}");
    let tree = syntax::parse_checked(&wrapped)?;
    let mut edits = rename_edits(tree.root_node(), &wrapped, origin, to);
    walk(tree.root_node(), |n| {
        if n.kind() == "marker_annotation" && text(n, &wrapped) == "@Override" {
            let end =
                wrapped[n.end_byte()..].find(|c: char| !c.is_whitespace()).map_or(n.end_byte(), |i| n.end_byte() + i);
            edits.push(SpanEdit::delete(Span::new(n.start_byte(), end)));
            return false;
        }
        true
    });
    let out = apply_edits(&wrapped, &edits)?;
    Ok(out[OPEN.len()..out.len() - 2].to_string())
}

fn verify_generated(generated: &ClassModel, blocks: &[PartitionBlock], level: usize) -> Result<(), TransformError> {
    let fail = |m: String| Err(TransformError::PostconditionViolated(m));
    let block_of: BTreeMap<&str, usize> =
        blocks.iter().enumerate().flat_map(|(i, b)| b.methods.iter().map(move |m| (m.as_str(), i))).collect();
    let graph = method_graph(generated);
    for m in &graph.methods {
        if !block_of.contains_key(m.name.as_str()) {
            return fail(format!("method {} has no origin block", m.name));
        }
    }
    for &(a, b) in &graph.edges {
        let (ma, mb) = (&graph.methods[a].name, &graph.methods[b].name);
        if block_of[ma.as_str()] != block_of[mb.as_str()] {
            return fail(format!("{ma} and {mb} connect different blocks"));
        }
    }
    let report = compute_yalcom(generated).map_err(|e| TransformError::PostconditionViolated(e.to_string()))?;
    if report.component_count() < 1 + level || report.yalcom <= 0.0 {
        return fail(format!("only {} components at level {level}", report.component_count()));
    }
    Ok(())
}
