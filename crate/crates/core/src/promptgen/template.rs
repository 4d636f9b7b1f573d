use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Concept, PromptError, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub concept: Concept,
    pub task: TaskKind,
    pub text: String,
}

const BUILTIN: [(Concept, TaskKind, &str); 6] = [
    (Concept::Coupling, TaskKind::Verification, include_str!("../../templates/coupling_verification.txt")),
    (Concept::Coupling, TaskKind::GuidedGeneration, include_str!("../../templates/coupling_guided.txt")),
    (Concept::Coupling, TaskKind::OpenEndedGeneration, include_str!("../../templates/coupling_open.txt")),
    (Concept::Cohesion, TaskKind::Verification, include_str!("../../templates/cohesion_verification.txt")),
    (Concept::Cohesion, TaskKind::GuidedGeneration, include_str!("../../templates/cohesion_guided.txt")),
    (Concept::Cohesion, TaskKind::OpenEndedGeneration, include_str!("../../templates/cohesion_open.txt")),
];

pub fn template_file_name(concept: Concept, task: TaskKind) -> String {
    let t = match task {
        TaskKind::Verification => "verification",
        TaskKind::GuidedGeneration => "guided",
        TaskKind::OpenEndedGeneration => "open",
    };
    format!("{}_{t}.txt", concept.as_str())
}

impl PromptTemplate {
    pub fn builtin(concept: Concept, task: TaskKind) -> Self {
        let text = BUILTIN
            .iter()
            .find(|(c, t, _)| *c == concept && *t == task)
            .map(|(_, _, s)| s.to_string())
            .expect("every concept/task pair has a template");
        PromptTemplate { concept, task, text }
    }

    pub fn placeholders(&self) -> Vec<String> {
        let mut out = Vec::new();
        scan(&self.text, |piece| {
            if let Piece::Placeholder(name) = piece {
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
            }
        });
        out
    }
}

/// The six templates, with files in `dir` (named like `coupling_open.txt`)
/// replacing the built-in text where present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<(Concept, TaskKind), PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let templates = BUILTIN.iter().map(|(c, t, _)| ((*c, *t), PromptTemplate::builtin(*c, *t))).collect();
        TemplateSet { templates }
    }
}

impl TemplateSet {
    pub fn load(dir: Option<&Path>) -> Result<Self, PromptError> {
        let mut set = TemplateSet::default();
        let Some(dir) = dir else { return Ok(set) };
        for ((concept, task), template) in set.templates.iter_mut() {
            let path = dir.join(template_file_name(*concept, *task));
            if path.exists() {
                template.text = std::fs::read_to_string(&path)
                    .map_err(|e| PromptError::Template(format!("{}: {e}", path.display())))?;
            }
        }
        Ok(set)
    }

    pub fn get(&self, concept: Concept, task: TaskKind) -> &PromptTemplate {
        &self.templates[&(concept, task)]
    }

    /// Concatenated template texts, for fingerprinting a run configuration.
    pub fn fingerprint_text(&self) -> String {
        self.templates.values().map(|t| t.text.as_str()).collect::<Vec<_>>().join("\u{0}")
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

/// Splits template text at `{name}` markers, where `name` is `[a-z_]+`.
fn scan<'a>(text: &'a str, mut emit: impl FnMut(Piece<'a>)) {
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let name_len = after.find(|c: char| !(c.is_ascii_lowercase() || c == '_')).unwrap_or(after.len());
        if name_len > 0 && after[name_len..].starts_with('}') {
            emit(Piece::Literal(&rest[..open]));
            emit(Piece::Placeholder(&after[..name_len]));
            rest = &after[name_len + 1..];
        } else {
            emit(Piece::Literal(&rest[..=open]));
            rest = after;
        }
    }
    emit(Piece::Literal(rest));
}

/// Single-pass substitution: text coming from bindings is never rescanned,
/// so Java braces inside `{code}` are safe.
pub fn render_template(template: &PromptTemplate, bindings: &BTreeMap<&str, String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.text.len());
    let mut missing = None;
    scan(&template.text, |piece| match piece {
        Piece::Literal(s) => out.push_str(s),
        Piece::Placeholder(name) => match bindings.get(name) {
            Some(v) => out.push_str(v),
            None => {
                missing.get_or_insert_with(|| name.to_string());
            }
        },
    });
    match missing {
        Some(name) => Err(PromptError::UnboundPlaceholder(name)),
        None => Ok(out),
    }
}
