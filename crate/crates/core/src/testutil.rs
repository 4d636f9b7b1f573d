use std::path::PathBuf;

use crate::corpus::{parse_unit, CompilationUnit, SourceProject};

/// One unit per source string, named `U<i>.java`.
pub fn project(sources: &[&str]) -> SourceProject {
    let units = sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let path = PathBuf::from(format!("src/main/java/U{i}.java"));
            CompilationUnit { classes: parse_unit(&path, s).unwrap(), path, text: s.to_string() }
        })
        .collect();
    SourceProject { id: "t".into(), root_path: PathBuf::new(), units, skipped: vec![] }
}
