//! Chat-completion client, response log and structured-answer parsing.

mod backend;
mod runner;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::promptgen::{Concept, PromptTruth, TaskKind};

pub use backend::{Backend, Completion, HttpBackend, MockBackend, MockMode, TransportError};
pub use runner::{read_responses, run_batch, send, BatchSummary, RateLimiter, ResponseLog, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_name: String,
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token. Empty means no auth header.
    pub api_key_env: String,
    pub max_generation_tokens: u32,
    pub request_timeout_secs: u64,
    pub max_in_flight: usize,
    /// Requests per 60 s window; 0 disables the limit.
    pub rate_limit_per_minute: u32,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_in_flight == 0 {
            return Err(format!("model {}: max_in_flight must be at least 1", self.model_name));
        }
        if self.model_name.trim().is_empty() {
            return Err("model_name is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    MalformedAnswer,
    TransportFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub prompt_id: String,
    pub model_name: String,
    pub raw_text: String,
    pub reasoning_trace: String,
    pub answer_text: String,
    pub usage: Usage,
    pub latency_ms: u64,
    pub attempt_count: u32,
    pub status: Status,
}

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

/// Splits raw model output into (reasoning trace, answer text).
///
/// The trace is the `<think>` block when there is one (a lone `</think>` counts,
/// since some servers strip the opening tag), else everything before the last
/// `<answer>`. The answer is the content of the last complete answer block.
pub fn split_trace(raw: &str) -> (String, String) {
    let answer_block = raw.rfind(ANSWER_CLOSE).and_then(|close| {
        let open = raw[..close].rfind(ANSWER_OPEN)?;
        Some((open, &raw[open + ANSWER_OPEN.len()..close]))
    });
    let answer = answer_block.map(|(_, a)| a.trim().to_string()).unwrap_or_default();

    let trace = if let Some(close) = raw.find(THINK_CLOSE) {
        let start = raw[..close].find(THINK_OPEN).map(|o| o + THINK_OPEN.len()).unwrap_or(0);
        raw[start..close].to_string()
    } else if let Some((open, _)) = answer_block {
        raw[..open].to_string()
    } else {
        raw.to_string()
    };
    (trace.trim().to_string(), answer)
}

/// A structured answer, shaped by the prompt's task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "value", rename_all = "kebab-case")]
pub enum ParsedAnswer {
    Labels(Vec<bool>),
    Names(BTreeSet<String>),
    /// Unordered pairs, smaller name first.
    Pairs(BTreeSet<(String, String)>),
    /// Disjoint nonempty blocks in sorted order.
    Partition(Vec<BTreeSet<String>>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty answer")]
    Empty,
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("expected {expected} labels, found {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("`{0}` appears in more than one group")]
    BlockOverlap(String),
}

impl ParsedAnswer {
    /// Canonical answer text, which parses back to the same value.
    pub fn to_answer_text(&self) -> String {
        match self {
            ParsedAnswer::Labels(labels) => {
                labels.iter().map(|&b| if b { "yes" } else { "no" }).collect::<Vec<_>>().join("\n")
            }
            ParsedAnswer::Names(names) if names.is_empty() => "none".into(),
            ParsedAnswer::Names(names) => names.iter().cloned().collect::<Vec<_>>().join("\n"),
            ParsedAnswer::Pairs(pairs) if pairs.is_empty() => "none".into(),
            ParsedAnswer::Pairs(pairs) => {
                pairs.iter().map(|(a, b)| format!("{a} <-> {b}")).collect::<Vec<_>>().join("\n")
            }
            ParsedAnswer::Partition(blocks) => blocks
                .iter()
                .enumerate()
                .map(|(i, b)| format!("group{}: {}", i + 1, b.iter().cloned().collect::<Vec<_>>().join(", ")))
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }

    /// The answer a perfect model would give for `truth`.
    pub fn expected(truth: &PromptTruth) -> ParsedAnswer {
        match truth {
            PromptTruth::Assertions { labels, .. } => ParsedAnswer::Labels(labels.clone()),
            PromptTruth::RelatedSet { names, .. } => ParsedAnswer::Names(names.clone()),
            PromptTruth::CoupledPairs { pairs } => ParsedAnswer::Pairs(pairs.clone()),
            PromptTruth::Partition { blocks } => ParsedAnswer::Partition(normalize_partition(blocks.clone())),
        }
    }

    /// Empty prediction used when an answer is malformed or missing.
    pub fn empty_for(concept: Concept, task: TaskKind, n_labels: usize) -> ParsedAnswer {
        match (concept, task) {
            (_, TaskKind::Verification) => ParsedAnswer::Labels(vec![false; n_labels]),
            (_, TaskKind::GuidedGeneration) => ParsedAnswer::Names(BTreeSet::new()),
            (Concept::Coupling, TaskKind::OpenEndedGeneration) => ParsedAnswer::Pairs(BTreeSet::new()),
            (Concept::Cohesion, TaskKind::OpenEndedGeneration) => ParsedAnswer::Partition(Vec::new()),
        }
    }
}

pub fn normalize_partition(blocks: Vec<BTreeSet<String>>) -> Vec<BTreeSet<String>> {
    let mut blocks: Vec<_> = blocks.into_iter().filter(|b| !b.is_empty()).collect();
    blocks.sort();
    blocks
}

fn strip_decoration(line: &str) -> &str {
    let mut s = line.trim();
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = s.strip_prefix(bullet) {
            s = rest.trim_start();
        }
    }
    // "1. " or "1) " numbering
    let digits = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    if digits > 0 {
        let rest = &s[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            s = r.trim_start();
        }
    }
    s.trim_matches('`').trim()
}

fn clean_name(raw: &str, line: usize) -> Result<String, ParseError> {
    let mut name = raw.trim().trim_matches('`').trim();
    if let Some(open) = name.find('(') {
        if name.ends_with(')') {
            name = &name[..open];
        }
    }
    let name = name.trim();
    let mut chars = name.chars();
    let ok = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$');
    if ok {
        Ok(name.to_string())
    } else {
        Err(ParseError::BadLine { line, reason: format!("`{raw}` is not a name") })
    }
}

fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, strip_decoration(l))).filter(|(_, l)| !l.is_empty()).collect()
}

fn is_none(lines: &[(usize, &str)]) -> bool {
    matches!(lines, [(_, l)] if l.eq_ignore_ascii_case("none"))
}

/// Strict parse of the text inside the answer block.
///
/// `n_labels` is the number of assertions for verification prompts and is
/// ignored for the other tasks.
pub fn parse_structured_answer(
    answer_text: &str,
    concept: Concept,
    task: TaskKind,
    n_labels: usize,
) -> Result<ParsedAnswer, ParseError> {
    let lines = content_lines(answer_text);
    if lines.is_empty() {
        return Err(ParseError::Empty);
    }
    match (concept, task) {
        (_, TaskKind::Verification) => {
            let labels = lines
                .iter()
                .map(|&(n, l)| match l.trim_end_matches('.').to_ascii_lowercase().as_str() {
                    "yes" => Ok(true),
                    "no" => Ok(false),
                    _ => Err(ParseError::BadLine { line: n, reason: format!("expected yes or no, got `{l}`") }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if labels.len() != n_labels {
                return Err(ParseError::LabelCount { expected: n_labels, found: labels.len() });
            }
            Ok(ParsedAnswer::Labels(labels))
        }
        (_, TaskKind::GuidedGeneration) => {
            if is_none(&lines) {
                return Ok(ParsedAnswer::Names(BTreeSet::new()));
            }
            lines.iter().map(|&(n, l)| clean_name(l, n)).collect::<Result<_, _>>().map(ParsedAnswer::Names)
        }
        (Concept::Coupling, TaskKind::OpenEndedGeneration) => {
            if is_none(&lines) {
                return Ok(ParsedAnswer::Pairs(BTreeSet::new()));
            }
            let mut pairs = BTreeSet::new();
            for &(n, l) in &lines {
                let Some((a, b)) = l.split_once("<->") else {
                    return Err(ParseError::BadLine { line: n, reason: "expected `A <-> B`".into() });
                };
                let (a, b) = (clean_name(a, n)?, clean_name(b, n)?);
                if a == b {
                    return Err(ParseError::BadLine { line: n, reason: "a class cannot pair with itself".into() });
                }
                pairs.insert(if a <= b { (a, b) } else { (b, a) });
            }
            Ok(ParsedAnswer::Pairs(pairs))
        }
        (Concept::Cohesion, TaskKind::OpenEndedGeneration) => {
            let mut blocks = Vec::new();
            let mut seen = BTreeSet::new();
            for &(n, l) in &lines {
                let Some((_, members)) = l.split_once(':') else {
                    return Err(ParseError::BadLine { line: n, reason: "expected `group: a, b`".into() });
                };
                let mut block = BTreeSet::new();
                for m in members.split(',').filter(|m| !m.trim().is_empty()) {
                    let name = clean_name(m, n)?;
                    if !seen.insert(name.clone()) {
                        return Err(ParseError::BlockOverlap(name));
                    }
                    block.insert(name);
                }
                blocks.push(block);
            }
            Ok(ParsedAnswer::Partition(normalize_partition(blocks)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_examples() {
        assert_eq!(split_trace("<think>t</think><answer>a</answer>"), ("t".into(), "a".into()));
        assert_eq!(split_trace("just rambling"), ("just rambling".into(), String::new()));
        assert_eq!(split_trace("x <answer>one</answer> y <answer>two</answer>").1, "two");
        assert_eq!(split_trace("pre <answer>a</answer>").0, "pre");
        assert_eq!(split_trace("reasoning</think>\n<answer>yes</answer>"), ("reasoning".into(), "yes".into()));
        // unterminated last block falls back to the previous complete one
        assert_eq!(split_trace("<answer>a</answer><answer>b").1, "a");
    }

    #[test]
    fn parse_examples() {
        use Concept::*;
        use TaskKind::*;
        assert_eq!(
            parse_structured_answer("yes\nno", Coupling, Verification, 2),
            Ok(ParsedAnswer::Labels(vec![true, false]))
        );
        assert_eq!(
            parse_structured_answer("yes", Coupling, Verification, 2),
            Err(ParseError::LabelCount { expected: 2, found: 1 })
        );
        assert_eq!(
            parse_structured_answer("ServiceA <-> RepoB", Coupling, OpenEndedGeneration, 0),
            Ok(ParsedAnswer::Pairs([("RepoB".into(), "ServiceA".into())].into()))
        );
        assert_eq!(
            parse_structured_answer("group1: a, b\ngroup2: a", Cohesion, OpenEndedGeneration, 0),
            Err(ParseError::BlockOverlap("a".into()))
        );
        assert_eq!(
            parse_structured_answer("- `Foo`\n2. Bar()\n", Coupling, GuidedGeneration, 0),
            Ok(ParsedAnswer::Names(["Bar".to_string(), "Foo".to_string()].into()))
        );
        assert_eq!(
            parse_structured_answer("none", Cohesion, GuidedGeneration, 0),
            Ok(ParsedAnswer::Names(BTreeSet::new()))
        );
        assert_eq!(parse_structured_answer("  \n", Cohesion, GuidedGeneration, 0), Err(ParseError::Empty));
        assert!(parse_structured_answer("maybe", Cohesion, Verification, 1).is_err());
        assert!(parse_structured_answer("the Foo class", Coupling, GuidedGeneration, 0).is_err());
    }

    fn name() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9_]{0,6}"
    }

    fn decorated_line(s: String) -> impl Strategy<Value = String> {
        prop_oneof![Just(s.clone()), Just(format!("- {s}")), Just(format!("  `{s}`  ")), Just(format!("3. {s}"))]
    }

    proptest! {
        #[test]
        fn names_canonicalize_idempotently(lines in proptest::collection::vec(name().prop_flat_map(decorated_line), 1..6)) {
            let text = lines.join("\n");
            if let Ok(first) = parse_structured_answer(&text, Concept::Coupling, TaskKind::GuidedGeneration, 0) {
                let again = parse_structured_answer(&first.to_answer_text(), Concept::Coupling, TaskKind::GuidedGeneration, 0);
                prop_assert_eq!(again, Ok(first));
            }
        }

        #[test]
        fn pairs_canonicalize_idempotently(pairs in proptest::collection::vec((name(), name()), 0..6)) {
            let text = if pairs.is_empty() {
                "none".to_string()
            } else {
                pairs.iter().map(|(a, b)| format!("{a}<->{b}")).collect::<Vec<_>>().join("\n")
            };
            if let Ok(first) = parse_structured_answer(&text, Concept::Coupling, TaskKind::OpenEndedGeneration, 0) {
                if let ParsedAnswer::Pairs(ps) = &first {
                    prop_assert!(ps.iter().all(|(a, b)| a < b));
                }
                let again = parse_structured_answer(&first.to_answer_text(), Concept::Coupling, TaskKind::OpenEndedGeneration, 0);
                prop_assert_eq!(again, Ok(first));
            }
        }

        #[test]
        fn partitions_canonicalize_idempotently(groups in proptest::collection::vec(proptest::collection::vec(name(), 1..4), 1..4)) {
            let text = groups
                .iter()
                .enumerate()
                .map(|(i, g)| format!("g{i}: {}", g.join(" ,")))
                .collect::<Vec<_>>()
                .join("\n");
            if let Ok(first) = parse_structured_answer(&text, Concept::Cohesion, TaskKind::OpenEndedGeneration, 0) {
                let again = parse_structured_answer(&first.to_answer_text(), Concept::Cohesion, TaskKind::OpenEndedGeneration, 0);
                prop_assert_eq!(again, Ok(first));
            }
        }

        #[test]
        fn labels_roundtrip(labels in proptest::collection::vec(any::<bool>(), 1..10)) {
            let a = ParsedAnswer::Labels(labels.clone());
            prop_assert_eq!(
                parse_structured_answer(&a.to_answer_text(), Concept::Cohesion, TaskKind::Verification, labels.len()),
                Ok(a)
            );
        }
    }
}
