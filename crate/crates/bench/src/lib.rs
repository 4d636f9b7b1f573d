//! Shared inputs for the criterion benchmarks under `benches/`.

use std::path::PathBuf;

use designprobe_core::corpus::{load_project, SourceProject};

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus/shop")
}

pub fn fixture() -> SourceProject {
    load_project(&fixture_path()).expect("fixture corpus loads")
}
