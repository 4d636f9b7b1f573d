use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{parse_structured_answer, split_trace, Backend, InferenceResult, ModelSpec, Status, TransportError, Usage};
use crate::promptgen::{PromptInstance, PromptTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, doubling from `base_delay`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Sliding-window limiter: at most `limit` acquisitions in any `window`.
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    stamps: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    /// `limit == 0` never blocks.
    pub fn new(limit: usize, window: Duration) -> Self {
        RateLimiter { limit, window, stamps: Mutex::new(VecDeque::new()) }
    }

    pub fn per_minute(limit: u32) -> Self {
        Self::new(limit as usize, Duration::from_secs(60))
    }

    pub fn acquire(&self) {
        if self.limit == 0 {
            return;
        }
        loop {
            let wait = {
                let mut stamps = self.stamps.lock().unwrap();
                let now = Instant::now();
                while stamps.front().is_some_and(|t| now.duration_since(*t) >= self.window) {
                    stamps.pop_front();
                }
                if stamps.len() < self.limit {
                    stamps.push_back(now);
                    return;
                }
                self.window - now.duration_since(stamps[0])
            };
            std::thread::sleep(wait);
        }
    }
}

fn label_count(truth: &PromptTruth) -> usize {
    match truth {
        PromptTruth::Assertions { labels, .. } => labels.len(),
        _ => 0,
    }
}

/// One prompt through the backend with retries. The caller persists the result.
pub fn send(
    prompt: &PromptInstance,
    spec: &ModelSpec,
    backend: &dyn Backend,
    policy: &RetryPolicy,
    limiter: &RateLimiter,
) -> InferenceResult {
    let mut attempt = 0;
    let mut last_error = String::new();
    while attempt < policy.max_attempts.max(1) {
        attempt += 1;
        limiter.acquire();
        let started = Instant::now();
        match backend.complete(prompt, spec) {
            Ok(c) => {
                let latency_ms = started.elapsed().as_millis() as u64;
                let (reasoning_trace, answer_text) = split_trace(&c.text);
                let parsed = parse_structured_answer(
                    &answer_text,
                    prompt.concept,
                    prompt.task,
                    label_count(&prompt.ground_truth),
                );
                return InferenceResult {
                    prompt_id: prompt.id.clone(),
                    model_name: spec.model_name.clone(),
                    raw_text: c.text,
                    reasoning_trace,
                    answer_text,
                    usage: c.usage,
                    latency_ms,
                    attempt_count: attempt,
                    status: if parsed.is_ok() { Status::Ok } else { Status::MalformedAnswer },
                };
            }
            Err(TransportError::Transient(e)) => {
                tracing::debug!(prompt = %prompt.id, attempt, error = %e, "transient failure");
                last_error = e;
                if attempt < policy.max_attempts {
                    std::thread::sleep(policy.backoff(attempt));
                }
            }
            Err(TransportError::Fatal(e)) => {
                last_error = e;
                break;
            }
        }
    }
    tracing::warn!(prompt = %prompt.id, attempts = attempt, error = %last_error, "giving up");
    InferenceResult {
        prompt_id: prompt.id.clone(),
        model_name: spec.model_name.clone(),
        raw_text: String::new(),
        reasoning_trace: String::new(),
        answer_text: String::new(),
        usage: Usage::default(),
        latency_ms: 0,
        attempt_count: attempt,
        status: Status::TransportFailure,
    }
}

/// Append-only `responses.jsonl`, shared by every model. For the model it was
/// opened for, ids with a non-failure record are complete; transport failures
/// are retried on a later run and the newer line wins.
pub struct ResponseLog {
    path: PathBuf,
    model_name: String,
    file: File,
    complete: BTreeSet<String>,
}

impl ResponseLog {
    pub fn open(path: &Path, model_name: &str) -> io::Result<Self> {
        let complete = read_responses(path)?
            .into_iter()
            .filter(|r| r.model_name == model_name && r.status != Status::TransportFailure)
            .map(|r| r.prompt_id)
            .collect();
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        // A crash mid-line leaves no trailing newline; start fresh on the next line.
        let len = file.metadata()?.len();
        if len > 0 {
            let mut last = [0u8; 1];
            file.seek(SeekFrom::Start(len - 1))?;
            file.read_exact(&mut last)?;
            if last[0] != b'\n' {
                file.write_all(b"\n")?;
            }
        }
        Ok(ResponseLog { path: path.to_path_buf(), model_name: model_name.to_string(), file, complete })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_complete(&self, prompt_id: &str) -> bool {
        self.complete.contains(prompt_id)
    }

    pub fn append(&mut self, result: &InferenceResult) -> io::Result<()> {
        let mut line = serde_json::to_string(result).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        if result.status != Status::TransportFailure && result.model_name == self.model_name {
            self.complete.insert(result.prompt_id.clone());
        }
        Ok(())
    }
}

/// Latest record per (model, prompt id), in that order. Unreadable lines are skipped.
pub fn read_responses(path: &Path) -> io::Result<Vec<InferenceResult>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut latest = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<InferenceResult>(&line) {
            Ok(r) => {
                latest.insert((r.model_name.clone(), r.prompt_id.clone()), r);
            }
            Err(e) => tracing::warn!(path = %path.display(), line = i + 1, error = %e, "skipping unreadable record"),
        }
    }
    Ok(latest.into_values().collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub skipped: usize,
    pub ok: usize,
    pub malformed: usize,
    pub failed: usize,
}

/// Sends every prompt not already complete in `log`, with at most
/// `spec.max_in_flight` requests outstanding. Results reach the log through
/// a channel so only this thread writes.
pub fn run_batch(
    prompts: &[PromptInstance],
    spec: &ModelSpec,
    backend: &dyn Backend,
    policy: &RetryPolicy,
    limiter: &RateLimiter,
    log: &mut ResponseLog,
) -> io::Result<BatchSummary> {
    let pending: Vec<&PromptInstance> = prompts.iter().filter(|p| !log.is_complete(&p.id)).collect();
    let mut summary = BatchSummary { skipped: prompts.len() - pending.len(), ..Default::default() };
    let next = AtomicUsize::new(0);
    let workers = spec.max_in_flight.max(1).min(pending.len());
    let (tx, rx) = mpsc::channel::<InferenceResult>();

    std::thread::scope(|scope| -> io::Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, pending) = (&next, &pending);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = pending.get(i) else { break };
                if tx.send(send(p, spec, backend, policy, limiter)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for result in rx {
            log.append(&result)?;
            match result.status {
                Status::Ok => summary.ok += 1,
                Status::MalformedAnswer => summary.malformed += 1,
                Status::TransportFailure => summary.failed += 1,
            }
        }
        Ok(())
    })?;
    Ok(summary)
}
