use std::collections::BTreeSet;

use tree_sitter::Node;

use super::TransformError;
use crate::corpus::{apply_edits, parse_class_text, render_class, CallableId, ClassModel, MethodModel, Span, SpanEdit};
use crate::syntax::{self, children, is_comment, text, walk};

fn span(n: Node<'_>) -> Span {
    Span::new(n.start_byte(), n.end_byte())
}

/// Deletions for every comment. A comment alone on its line takes the whole line with it.
fn comment_edits(root: Node<'_>, src: &str) -> Vec<SpanEdit> {
    let mut edits = Vec::new();
    walk(root, |n| {
        if !is_comment(n) {
            return true;
        }
        let (start, end) = (n.start_byte(), n.end_byte());
        let line_start = src[..start].rfind('\n').map_or(0, |i| i + 1);
        let line_end = src[end..].find('\n').map_or(src.len(), |i| end + i);
        let before_blank = src[line_start..start].trim().is_empty();
        let after_blank = src[end..line_end].trim().is_empty();
        if before_blank && after_blank {
            let stop = if line_end < src.len() { line_end + 1 } else { line_end };
            edits.push(SpanEdit::delete(Span::new(line_start, stop)));
        } else if after_blank {
            let trimmed = src[..start].trim_end_matches([' ', '\t']).len();
            edits.push(SpanEdit::delete(Span::new(trimmed.max(line_start), end)));
        } else {
            let glue = src[..start].ends_with(|c: char| !c.is_whitespace())
                && src[end..].starts_with(|c: char| !c.is_whitespace());
            edits.push(SpanEdit::new(Span::new(start, end), if glue { " " } else { "" }));
        }
        false
    });
    // Whole-line deletions of neighbouring comments can touch but never overlap;
    // a trailing comment followed by a full-line one could, so drop the later one.
    edits.sort_by_key(|e| e.span.start);
    let mut kept: Vec<SpanEdit> = Vec::with_capacity(edits.len());
    for e in edits {
        if kept.last().is_none_or(|k| k.span.end <= e.span.start) {
            kept.push(e);
        }
    }
    kept
}

/// Removes every comment from a Java fragment that parses on its own.
pub fn remove_comments(source: &str) -> Result<String, TransformError> {
    let tree = syntax::parse(source);
    let out = apply_edits(source, &comment_edits(tree.root_node(), source))?;
    syntax::check(&out)?;
    Ok(out)
}

fn default_return(return_type: Option<&str>) -> Option<&'static str> {
    match return_type? {
        "void" => None,
        "boolean" => Some("false"),
        "byte" | "short" | "int" | "long" | "char" | "float" | "double" => Some("0"),
        _ => Some("null"),
    }
}

fn stub_body(m: &MethodModel) -> String {
    match default_return(m.return_type_name.as_deref()) {
        Some(v) => format!("{{ return {v}; }}"),
        None => "{ }".to_string(),
    }
}

/// Signature-only rendering: comments gone, constructor bodies and bodies of
/// `preserve`d methods kept, every other method body reduced to a stub.
pub fn skeletonize(class: &ClassModel, preserve: &BTreeSet<CallableId>) -> Result<String, TransformError> {
    let tree = syntax::parse(&class.text);
    let mut edits: Vec<SpanEdit> = class
        .methods
        .iter()
        .filter(|m| !preserve.contains(&m.id()))
        .filter_map(|m| m.body_span.map(|b| SpanEdit::new(b, stub_body(m))))
        .collect();
    let bodies: Vec<Span> = edits.iter().map(|e| e.span).collect();
    edits.extend(
        comment_edits(tree.root_node(), &class.text)
            .into_iter()
            .filter(|c| !bodies.iter().any(|b| b.start < c.span.end && c.span.start < b.end)),
    );
    Ok(render_class(class, &edits)?)
}

fn is_instantiation(n: Node<'_>, src: &str) -> bool {
    match n.kind() {
        "object_creation_expression" | "array_creation_expression" => true,
        "method_reference" => text(n, src).trim_end().ends_with("new"),
        _ => false,
    }
}

/// Outermost object-creation-like nodes (`new T(..)`, `new T[..]`, `T::new`).
fn instantiation_nodes<'t>(root: Node<'t>, src: &str) -> Vec<Node<'t>> {
    let mut found = Vec::new();
    walk(root, |n| {
        if is_instantiation(n, src) {
            found.push(n);
            return false;
        }
        true
    });
    found
}

/// `(type name, span)` of every `new T(...)` in a parseable fragment.
pub fn object_creations_of(source: &str) -> Vec<(String, Span)> {
    let tree = syntax::parse(source);
    let mut out = Vec::new();
    walk(tree.root_node(), |n| {
        if n.kind() == "object_creation_expression" {
            if let Some(ty) = n.child_by_field_name("type") {
                out.push((crate::corpus::parse::base_type_name(ty, source), span(n)));
            }
        }
        true
    });
    out
}

/// Number of instantiation expressions of any form, nested ones included.
pub fn count_object_creations(source: &str) -> usize {
    let tree = syntax::parse(source);
    let mut count = 0;
    walk(tree.root_node(), |n| {
        if is_instantiation(n, source) {
            count += 1;
        }
        true
    });
    count
}

const STATEMENT_CONTAINERS: [&str; 4] = ["block", "constructor_body", "switch_block_statement_group", "program"];

fn statement_edit(stmt: Node<'_>) -> SpanEdit {
    let in_container = stmt.parent().is_some_and(|p| STATEMENT_CONTAINERS.contains(&p.kind()));
    SpanEdit::new(span(stmt), if in_container { "" } else { ";" })
}

fn strip_edit(n: Node<'_>) -> SpanEdit {
    let Some(parent) = n.parent() else {
        return SpanEdit::new(span(n), "null");
    };
    match parent.kind() {
        "expression_statement" => statement_edit(parent),
        "assignment_expression"
            if parent.child_by_field_name("right") == Some(n)
                && parent.parent().is_some_and(|g| g.kind() == "expression_statement") =>
        {
            statement_edit(parent.parent().unwrap())
        }
        "variable_declarator" if parent.child_by_field_name("value") == Some(n) => {
            let name_end = parent.child_by_field_name("name").map_or(n.start_byte(), |x| {
                // keep array dimensions written after the name, e.g. `int a[] = ...`
                children(parent)
                    .into_iter()
                    .take_while(|c| c.kind() != "=")
                    .last()
                    .map_or(x.end_byte(), |c| c.end_byte())
            });
            SpanEdit::delete(Span::new(name_end, n.end_byte()))
        }
        _ => SpanEdit::new(span(n), "null"),
    }
}

/// Removes instantiations: standalone creating statements are deleted, initializers
/// dropped, and any other creation expression replaced by `null`.
pub fn strip_instantiations(class: &ClassModel) -> Result<String, TransformError> {
    let tree = syntax::parse(&class.text);
    let edits: Vec<SpanEdit> = instantiation_nodes(tree.root_node(), &class.text).into_iter().map(strip_edit).collect();
    Ok(render_class(class, &edits)?)
}

/// Distractor form: skeletonized with nothing preserved, then instantiation-free.
pub fn prepare_distractor(class: &ClassModel) -> Result<String, TransformError> {
    let skeleton = skeletonize(class, &BTreeSet::new())?;
    let reparsed = parse_class_text(&skeleton)?;
    strip_instantiations(&reparsed)
}
