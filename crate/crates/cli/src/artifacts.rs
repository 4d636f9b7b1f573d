//! On-disk artifact names and jsonl/csv helpers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::StageError;

pub const CORPUS: &str = "corpus.json";
pub const SKIPPED_UNITS: &str = "skipped_units.txt";
pub const ANALYSIS: &str = "analysis.json";
pub const GRAPH: &str = "dependency_graph.tsv";
pub const MUTATIONS: &str = "mutations.jsonl";
pub const MUTATION_LOG: &str = "mutation_failures.jsonl";
/// Directory of per-record edited sources; not hashed into the manifest.
pub const MUTATION_DIR: &str = "mutations";
pub const PROMPTS: &str = "prompts.jsonl";
pub const PROMPT_LOG: &str = "prompt_shortfalls.jsonl";
pub const SAMPLE: &str = "sample.jsonl";
pub const SAMPLING_REPORT: &str = "sampling_report.json";
pub const RESPONSES: &str = "responses.jsonl";
pub const SCORES: &str = "scores.jsonl";
pub const REPORT: &str = "report.csv";
pub const REPORT_POOLED: &str = "report_pooled.csv";
pub const TRACE_STATS: &str = "trace_stats.jsonl";
pub const TRACE_REPORT: &str = "trace_report.csv";
pub const MANIFEST: &str = "manifest.json";

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StageError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StageError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| StageError::Failed(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StageError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StageError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| StageError::Failed(format!("{}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), StageError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| StageError::Failed(e.to_string()))?;
    w.write_record(header).map_err(|e| StageError::Failed(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| StageError::Failed(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn file_sha256(path: &Path) -> Result<String, StageError> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}
