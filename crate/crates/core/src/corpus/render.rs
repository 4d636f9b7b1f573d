use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ClassModel, CompilationUnit, Span};
use crate::syntax::{self, SyntaxError};

/// Replace `span` of the original text with `replacement`. An empty span is an insertion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanEdit {
    pub span: Span,
    pub replacement: String,
}

impl SpanEdit {
    pub fn new(span: Span, replacement: impl Into<String>) -> Self {
        SpanEdit { span, replacement: replacement.into() }
    }

    pub fn delete(span: Span) -> Self {
        SpanEdit::new(span, "")
    }

    pub fn insert(at: usize, text: impl Into<String>) -> Self {
        SpanEdit::new(Span::new(at, at), text)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("edits overlap at {first:?} and {second:?}")]
    OverlappingEdits { first: Span, second: Span },
    #[error("edit {0:?} lies outside the text")]
    OutOfBounds(Span),
    #[error("edited text does not parse: {0}")]
    Reparse(#[from] SyntaxError),
}

/// Applies non-overlapping span replacements; untouched bytes are copied verbatim.
/// Insertions at the same offset are applied in the given order.
pub fn apply_edits(text: &str, edits: &[SpanEdit]) -> Result<String, RenderError> {
    let mut order: Vec<&SpanEdit> = edits.iter().collect();
    order.sort_by_key(|e| (e.span.start, e.span.end));
    for e in &order {
        if e.span.end > text.len() || !text.is_char_boundary(e.span.start) || !text.is_char_boundary(e.span.end) {
            return Err(RenderError::OutOfBounds(e.span));
        }
    }
    for pair in order.windows(2) {
        let (a, b) = (pair[0].span, pair[1].span);
        let overlaps = b.start < a.end || (a == b && !a.is_empty());
        if overlaps {
            return Err(RenderError::OverlappingEdits { first: a, second: b });
        }
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for e in order {
        out.push_str(&text[cursor..e.span.start]);
        out.push_str(&e.replacement);
        cursor = e.span.end;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

/// Applies unit-relative edits to a compilation unit and checks the result parses.
pub fn render_unit(unit: &CompilationUnit, edits: &[SpanEdit]) -> Result<String, RenderError> {
    let out = apply_edits(&unit.text, edits)?;
    syntax::check(&out)?;
    Ok(out)
}

/// Applies class-relative edits to a class declaration and checks the result parses.
pub fn render_class(class: &ClassModel, edits: &[SpanEdit]) -> Result<String, RenderError> {
    let out = apply_edits(&class.text, edits)?;
    syntax::check(&out)?;
    Ok(out)
}
