use std::collections::BTreeSet;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{ModelSpec, ParsedAnswer, Usage};
use crate::promptgen::{Concept, PromptInstance, PromptTruth, TaskKind};
use crate::sampling::count_tokens;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: 429, 5xx, timeouts, refused connections.
    #[error("transient: {0}")]
    Transient(String),
    #[error("fatal: {0}")]
    Fatal(String),
}

/// Anything that turns a prompt into model output.
pub trait Backend: Sync {
    fn complete(&self, prompt: &PromptInstance, spec: &ModelSpec) -> Result<Completion, TransportError>;
}

/// Chat-completions endpoint over blocking HTTP.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Reads the bearer token from `spec.api_key_env`; an empty variable name disables auth.
    pub fn new(spec: &ModelSpec) -> Result<Self, TransportError> {
        let api_key =
            if spec.api_key_env.is_empty() {
                None
            } else {
                Some(std::env::var(&spec.api_key_env).map_err(|_| {
                    TransportError::Fatal(format!("environment variable {} is not set", spec.api_key_env))
                })?)
            };
        Self::with_key(spec, api_key)
    }

    pub fn with_key(spec: &ModelSpec, api_key: Option<String>) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(spec.request_timeout_secs.max(1)))
            .build()
            .map_err(|e| TransportError::Fatal(e.to_string()))?;
        Ok(HttpBackend { client, api_key })
    }
}

pub(crate) fn request_body(prompt: &str, spec: &ModelSpec) -> Value {
    json!({
        "model": spec.model_name,
        "messages": [{ "role": "user", "content": prompt }],
        "temperature": 0,
        "max_tokens": spec.max_generation_tokens,
    })
}

/// Pulls text and usage out of a chat-completions response. A separate
/// `reasoning_content` field is folded back in as a `<think>` block.
pub(crate) fn completion_from_json(body: &Value) -> Result<Completion, TransportError> {
    let message = &body["choices"][0]["message"];
    let content = message["content"].as_str();
    let reasoning = message["reasoning_content"].as_str().or_else(|| message["reasoning"].as_str());
    if content.is_none() && reasoning.is_none() {
        return Err(TransportError::Fatal("response has no choices[0].message.content".into()));
    }
    let mut text = String::new();
    if let Some(r) = reasoning.filter(|r| !r.is_empty()) {
        text.push_str("<think>");
        text.push_str(r);
        text.push_str("</think>\n");
    }
    text.push_str(content.unwrap_or_default());
    let usage = Usage {
        prompt_tokens: body["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: body["usage"]["completion_tokens"].as_u64().unwrap_or(0),
    };
    Ok(Completion { text, usage })
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &PromptInstance, spec: &ModelSpec) -> Result<Completion, TransportError> {
        let mut req = self.client.post(&spec.endpoint).json(&request_body(&prompt.prompt, spec));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                TransportError::Transient(e.to_string())
            } else {
                TransportError::Fatal(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let detail = resp.text().unwrap_or_default();
            return Err(TransportError::Fatal(format!("HTTP {status}: {detail}")));
        }
        let body: Value = resp.json().map_err(|e| TransportError::Transient(format!("bad body: {e}")))?;
        completion_from_json(&body)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockMode {
    /// Always answers with the ground truth, mentioning every entity on the way.
    Oracle,
    /// Answers well-formed but random, seeded by the prompt id.
    Random,
    /// Never produces an answer block.
    Silent,
}

impl std::str::FromStr for MockMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(MockMode::Oracle),
            "random" => Ok(MockMode::Random),
            "silent" => Ok(MockMode::Silent),
            other => Err(format!("unknown mock mode `{other}` (oracle, random, silent)")),
        }
    }
}

/// Local stand-in for a model, driven by the prompt's ground truth.
#[derive(Debug, Clone)]
pub struct MockBackend {
    pub mode: MockMode,
    pub seed: u64,
}

impl MockBackend {
    pub fn new(mode: MockMode, seed: u64) -> Self {
        MockBackend { mode, seed }
    }

    fn random_answer(&self, p: &PromptInstance) -> ParsedAnswer {
        let mut rng = rng_for(self.seed, &p.id);
        let entities: Vec<&String> = p.provenance.entities.iter().collect();
        match (&p.ground_truth, p.concept, p.task) {
            (PromptTruth::Assertions { pairs, .. }, _, _) => {
                ParsedAnswer::Labels((0..pairs.len()).map(|_| rng.random_bool(0.5)).collect())
            }
            (PromptTruth::RelatedSet { seed, .. }, _, _) => ParsedAnswer::Names(
                entities
                    .iter()
                    .filter(|e| *e != &seed)
                    .filter(|_| rng.random_bool(0.5))
                    .map(|e| e.to_string())
                    .collect(),
            ),
            (PromptTruth::Partition { blocks }, _, _) => {
                let k = blocks.len().max(1);
                let universe: BTreeSet<&String> = blocks.iter().flatten().collect();
                let mut out = vec![BTreeSet::new(); k];
                for m in universe {
                    out[rng.random_range(0..k)].insert(m.clone());
                }
                ParsedAnswer::Partition(super::normalize_partition(out))
            }
            (PromptTruth::CoupledPairs { .. }, _, _) => {
                let p_pick = 2.0 / entities.len().max(2) as f64;
                let mut pairs = BTreeSet::new();
                for (i, a) in entities.iter().enumerate() {
                    for b in &entities[i + 1..] {
                        if rng.random_bool(p_pick.min(1.0)) {
                            let (a, b) = if a <= b { (a, b) } else { (b, a) };
                            pairs.insert((a.to_string(), b.to_string()));
                        }
                    }
                }
                ParsedAnswer::Pairs(pairs)
            }
        }
    }
}

impl Backend for MockBackend {
    fn complete(&self, p: &PromptInstance, _spec: &ModelSpec) -> Result<Completion, TransportError> {
        let text = match self.mode {
            MockMode::Oracle => {
                let answer = ParsedAnswer::expected(&p.ground_truth);
                let subject = match p.concept {
                    Concept::Coupling => "class",
                    Concept::Cohesion => "method",
                };
                format!(
                    "<think>Checking each {subject}: {}.</think>\n<answer>\n{}\n</answer>",
                    p.provenance.entities.join(", "),
                    answer.to_answer_text()
                )
            }
            MockMode::Random => {
                let answer = self.random_answer(p);
                format!("<think>Guessing.</think>\n<answer>\n{}\n</answer>", answer.to_answer_text())
            }
            MockMode::Silent => match p.task {
                TaskKind::Verification => "I would rather not say.".to_string(),
                _ => "<think></think>".to_string(),
            },
        };
        let usage = Usage { prompt_tokens: p.token_count as u64, completion_tokens: count_tokens(&text) as u64 };
        Ok(Completion { text, usage })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmclient::{parse_structured_answer, split_trace};
    use crate::promptgen::Provenance;
    use crate::transforms::MutationKind;

    pub(crate) fn spec() -> ModelSpec {
        ModelSpec {
            model_name: "m".into(),
            endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
            api_key_env: String::new(),
            max_generation_tokens: 128,
            request_timeout_secs: 5,
            max_in_flight: 2,
            rate_limit_per_minute: 0,
        }
    }

    fn prompt(concept: Concept, task: TaskKind, truth: PromptTruth, entities: &[&str]) -> PromptInstance {
        PromptInstance {
            id: format!("{concept}-{task}"),
            concept,
            task,
            transform_kind: MutationKind::Cohesion,
            distortion_requested: 1.0,
            distortion_achieved: 1.0,
            prompt: "p".into(),
            ground_truth: truth,
            token_count: 1,
            shuffle_seed: 0,
            provenance: Provenance {
                project_id: "x".into(),
                record_id: "r".into(),
                distractors: vec![],
                entities: entities.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn samples() -> Vec<PromptInstance> {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        vec![
            prompt(
                Concept::Coupling,
                TaskKind::Verification,
                PromptTruth::Assertions {
                    pairs: vec![("A".into(), "B".into()), ("A".into(), "C".into())],
                    labels: vec![true, false],
                },
                &["A", "B", "C"],
            ),
            prompt(
                Concept::Coupling,
                TaskKind::GuidedGeneration,
                PromptTruth::RelatedSet { seed: "A".into(), names: set(&["B"]) },
                &["A", "B", "C"],
            ),
            prompt(
                Concept::Coupling,
                TaskKind::OpenEndedGeneration,
                PromptTruth::CoupledPairs { pairs: [("A".to_string(), "B".to_string())].into() },
                &["A", "B", "C"],
            ),
            prompt(
                Concept::Cohesion,
                TaskKind::OpenEndedGeneration,
                PromptTruth::Partition { blocks: vec![set(&["x", "y"]), set(&["z"])] },
                &["x", "y", "z"],
            ),
        ]
    }

    fn n_labels(p: &PromptInstance) -> usize {
        match &p.ground_truth {
            PromptTruth::Assertions { labels, .. } => labels.len(),
            _ => 0,
        }
    }

    #[test]
    fn oracle_answers_parse_to_truth() {
        let mock = MockBackend::new(MockMode::Oracle, 0);
        for p in samples() {
            let c = mock.complete(&p, &spec()).unwrap();
            let (trace, answer) = split_trace(&c.text);
            let parsed = parse_structured_answer(&answer, p.concept, p.task, n_labels(&p)).unwrap();
            assert_eq!(parsed, ParsedAnswer::expected(&p.ground_truth));
            assert!(p.provenance.entities.iter().all(|e| trace.contains(e.as_str())));
        }
    }

    #[test]
    fn random_is_well_formed_and_stable() {
        let mock = MockBackend::new(MockMode::Random, 5);
        for p in samples() {
            let a = mock.complete(&p, &spec()).unwrap();
            assert_eq!(a, mock.complete(&p, &spec()).unwrap());
            let (_, answer) = split_trace(&a.text);
            assert!(parse_structured_answer(&answer, p.concept, p.task, n_labels(&p)).is_ok(), "{answer}");
        }
    }

    #[test]
    fn silent_has_no_answer() {
        let mock = MockBackend::new(MockMode::Silent, 0);
        for p in samples() {
            assert_eq!(split_trace(&mock.complete(&p, &spec()).unwrap().text).1, "");
        }
    }

    #[test]
    fn request_and_response_shapes() {
        let body = request_body("hi", &spec());
        assert_eq!(body["temperature"], 0);
        assert_eq!(body["max_tokens"], 128);
        assert_eq!(body["messages"][0]["content"], "hi");
        assert_eq!(body["messages"].as_array().unwrap().len(), 1);

        let resp = json!({
            "choices": [{ "message": { "content": "<answer>yes</answer>", "reasoning_content": "hmm" } }],
            "usage": { "prompt_tokens": 7, "completion_tokens": 3 }
        });
        let c = completion_from_json(&resp).unwrap();
        assert_eq!(split_trace(&c.text), ("hmm".into(), "yes".into()));
        assert_eq!(c.usage, Usage { prompt_tokens: 7, completion_tokens: 3 });
        assert!(completion_from_json(&json!({})).is_err());
    }

    #[test]
    fn missing_key_is_fatal() {
        let mut s = spec();
        s.api_key_env = "DESIGNPROBE_SURELY_UNSET_KEY".into();
        assert!(matches!(HttpBackend::new(&s), Err(TransportError::Fatal(_))));
    }
}
