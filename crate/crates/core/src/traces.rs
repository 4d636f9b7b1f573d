//! Reasoning-trace length and entity coverage.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{distortion_label, mean_std};
use crate::llmclient::InferenceResult;
use crate::promptgen::{Concept, PromptInstance, TaskKind};
use crate::sampling::count_tokens;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("entity list is empty")]
    EmptyEntityList,
    #[error("trace for unknown prompt {0}")]
    DanglingId(String),
}

/// Token length under the prompt tokenizer.
pub fn trace_length(trace: &str) -> usize {
    count_tokens(trace)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Case-sensitive occurrence of `name` not embedded in a longer identifier.
pub fn mentions(trace: &str, name: &str) -> bool {
    if name.is_empty() {
        return false;
    }
    trace.match_indices(name).any(|(at, _)| {
        let before = trace[..at].chars().next_back();
        let after = trace[at + name.len()..].chars().next();
        !before.is_some_and(is_ident_char) && !after.is_some_and(is_ident_char)
    })
}

/// (mentioned, total, coverage) over the distinct entity names.
pub fn entity_coverage<S: AsRef<str>>(trace: &str, entities: &[S]) -> Result<(usize, usize, f64), TraceError> {
    let distinct: BTreeSet<&str> = entities.iter().map(AsRef::as_ref).collect();
    if distinct.is_empty() {
        return Err(TraceError::EmptyEntityList);
    }
    let mentioned = distinct.iter().filter(|e| mentions(trace, e)).count();
    Ok((mentioned, distinct.len(), mentioned as f64 / distinct.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub prompt_id: String,
    pub model_name: String,
    pub trace_token_count: usize,
    pub entities_total: usize,
    pub entities_mentioned: usize,
    pub coverage: f64,
}

pub fn trace_stats(result: &InferenceResult, prompt: &PromptInstance) -> Result<TraceStats, TraceError> {
    let (mentioned, total, coverage) = entity_coverage(&result.reasoning_trace, &prompt.provenance.entities)?;
    Ok(TraceStats {
        prompt_id: prompt.id.clone(),
        model_name: result.model_name.clone(),
        trace_token_count: trace_length(&result.reasoning_trace),
        entities_total: total,
        entities_mentioned: mentioned,
        coverage,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceGroup {
    pub concept: Concept,
    pub task: TaskKind,
    pub distortion: u32,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReportRow {
    pub group: TraceGroup,
    pub mean_trace_tokens: f64,
    pub mean_coverage: f64,
    pub n: usize,
}

pub const TRACE_REPORT_COLUMNS: [&str; 7] =
    ["concept", "task", "distortion", "model", "mean_trace_tokens", "mean_coverage", "n"];

impl TraceReportRow {
    pub fn csv_row(&self) -> Vec<String> {
        let g = &self.group;
        vec![
            g.concept.to_string(),
            g.task.to_string(),
            distortion_label(g.concept, Some(g.distortion)),
            g.model.clone(),
            format!("{:.3}", self.mean_trace_tokens),
            format!("{:.6}", self.mean_coverage),
            self.n.to_string(),
        ]
    }
}

/// Means per (concept, task, distortion, model), in key order.
pub fn trace_report(stats: &[TraceStats], prompts: &[PromptInstance]) -> Result<Vec<TraceReportRow>, TraceError> {
    let by_id: BTreeMap<&str, &PromptInstance> = prompts.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut groups: BTreeMap<TraceGroup, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for s in stats {
        let p = by_id.get(s.prompt_id.as_str()).ok_or_else(|| TraceError::DanglingId(s.prompt_id.clone()))?;
        let key = TraceGroup {
            concept: p.concept,
            task: p.task,
            distortion: p.distortion_step(),
            model: s.model_name.clone(),
        };
        let (lens, covs) = groups.entry(key).or_default();
        lens.push(s.trace_token_count as f64);
        covs.push(s.coverage);
    }
    Ok(groups
        .into_iter()
        .map(|(group, (lens, covs))| TraceReportRow {
            group,
            mean_trace_tokens: mean_std(&lens).0,
            mean_coverage: mean_std(&covs).0,
            n: lens.len(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::tests::synthetic;
    use proptest::prelude::*;

    #[test]
    fn length_examples() {
        assert_eq!(trace_length(""), 0);
        let text = "class A { void f() { return; } }";
        assert_eq!(trace_length(text), count_tokens(text));
        assert!(trace_length("a b c d") >= trace_length("a b"));
    }

    #[test]
    fn coverage_examples() {
        let trace = "OrderService builds Mailer; Repo is unused. Cache is fine.";
        assert_eq!(entity_coverage(trace, &["OrderService", "Mailer", "Repo", "Ledger"]).unwrap(), (3, 4, 0.75));
        assert_eq!(entity_coverage("only Repository here", &["Repo"]).unwrap().0, 0);
        assert_eq!(entity_coverage("getA() then getB()", &["getA", "getB"]).unwrap().2, 1.0);
        assert!(!mentions("orderservice", "OrderService"));
        assert!(!mentions("my_Repo", "Repo"));
        assert_eq!(entity_coverage::<&str>("x", &[]), Err(TraceError::EmptyEntityList));
    }

    proptest! {
        #[test]
        fn synthetic_trace_coverage_is_exact(n in 1usize..20, picks in proptest::collection::vec(any::<bool>(), 20)) {
            let entities: Vec<String> = (0..n).map(|i| format!("Entity{i}x")).collect();
            let chosen: Vec<&String> = entities.iter().zip(&picks).filter(|(_, p)| **p).map(|(e, _)| e).collect();
            let trace = chosen.iter().map(|e| format!("consider {e}.")).collect::<Vec<_>>().join(" ");
            let (k, total, cov) = entity_coverage(&trace, &entities).unwrap();
            prop_assert_eq!((k, total), (chosen.len(), n));
            prop_assert_eq!(cov, chosen.len() as f64 / n as f64);
        }
    }

    #[test]
    fn report_examples() {
        let prompts: Vec<_> = TaskKind::ALL
            .iter()
            .flat_map(|&t| (1..=9).map(move |s| synthetic(format!("{t}-{s}"), Concept::Coupling, t, s, 5)))
            .collect();
        let stat = |id: &str, cov: f64| TraceStats {
            prompt_id: id.into(),
            model_name: "m".into(),
            trace_token_count: 10,
            entities_total: 2,
            entities_mentioned: (cov * 2.0) as usize,
            coverage: cov,
        };
        let rows = trace_report(&[stat("verification-1", 1.0), stat("verification-1", 0.5)], &prompts).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].mean_coverage, rows[0].n), (0.75, 2));

        let all: Vec<_> = prompts.iter().map(|p| stat(&p.id, 1.0)).collect();
        assert_eq!(trace_report(&all, &prompts).unwrap().len(), 27);
        assert_eq!(trace_report(&[stat("nope", 1.0)], &prompts), Err(TraceError::DanglingId("nope".into())));
    }
}
