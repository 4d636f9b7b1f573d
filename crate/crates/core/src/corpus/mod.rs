//! Java project ingestion: compilation units, class models and the type hierarchy.
//!
//! Spans stored on a [`ClassModel`] and its members are byte ranges relative to
//! [`ClassModel::text`], the class declaration text. [`ClassModel::decl_span`]
//! locates that text inside its compilation unit, so a class-relative span
//! can be lifted into the unit with [`Span::shift`].

mod hierarchy;
pub(crate) mod parse;
mod render;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use hierarchy::{resolve_hierarchy, HierarchyError, TypeHierarchy, TypeResolver};
pub use parse::{parse_class_text, parse_unit};
pub use render::{apply_edits, render_class, render_unit, RenderError, SpanEdit};

use crate::syntax::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn shift(&self, offset: usize) -> Span {
        Span::new(self.start + offset, self.end + offset)
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassKind {
    ConcreteClass,
    AbstractClass,
    Interface,
    Enum,
    RecordLike,
}

impl ClassKind {
    pub fn is_abstract_type(self) -> bool {
        matches!(self, ClassKind::AbstractClass | ClassKind::Interface)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Visibility {
    Public,
    Protected,
    Private,
    #[default]
    Package,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Modifiers {
    pub visibility: Visibility,
    pub is_static: bool,
    pub is_abstract: bool,
    pub is_final: bool,
    /// Simple names of annotations, without the `@`.
    pub annotations: Vec<String>,
}

/// How one class names another. Shared by parsing and the dependency graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DependencyKind {
    FieldType,
    ParameterType,
    ReturnType,
    Instantiation,
    StaticCall,
    Inheritance,
    /// Any other mention: local variable types, casts, class literals, type arguments in expressions.
    TypeReference,
}

impl DependencyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DependencyKind::FieldType => "field-type",
            DependencyKind::ParameterType => "parameter-type",
            DependencyKind::ReturnType => "return-type",
            DependencyKind::Instantiation => "instantiation",
            DependencyKind::StaticCall => "static-call",
            DependencyKind::Inheritance => "inheritance",
            DependencyKind::TypeReference => "type-reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeUsage {
    /// Name as written (simple or dotted), generics stripped.
    pub name: String,
    pub kind: DependencyKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    /// Declared type text with whitespace removed, e.g. `List<String>`.
    pub type_name: String,
    /// Raw type name without type arguments, e.g. `List`.
    pub base_type: String,
}

/// Identity of a method or constructor inside its class: `name(T1,T2)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CallableId(pub String);

impl CallableId {
    pub fn new(name: &str, parameters: &[Parameter]) -> Self {
        let types: Vec<&str> = parameters.iter().map(|p| p.type_name.as_str()).collect();
        CallableId(format!("{}({})", name, types.join(",")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CallableId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// A top-level `this.f = value;` (or unqualified `f = value;`) statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldAssignment {
    pub field: String,
    /// Set when the right-hand side is a bare identifier.
    pub value_identifier: Option<String>,
    pub value_span: Span,
    pub statement_span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectCreation {
    pub type_name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodModel {
    pub name: String,
    pub parameters: Vec<Parameter>,
    /// `None` for constructors.
    pub return_type_name: Option<String>,
    pub modifiers: Modifiers,
    pub decl_span: Span,
    /// The parenthesized parameter list, parentheses included.
    pub params_span: Span,
    pub body_span: Option<Span>,
    pub accessed_fields: BTreeSet<String>,
    pub invoked_methods: BTreeSet<String>,
    /// Unqualified identifiers read or written that are not declared locally.
    pub free_identifiers: BTreeSet<String>,
    pub field_assignments: Vec<FieldAssignment>,
    pub body_statement_count: usize,
    pub object_creations: Vec<ObjectCreation>,
}

impl MethodModel {
    pub fn id(&self) -> CallableId {
        CallableId::new(&self.name, &self.parameters)
    }

    pub fn has_body(&self) -> bool {
        self.body_span.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldModel {
    pub name: String,
    pub declared_type_name: String,
    pub base_type: String,
    pub initializer_span: Option<Span>,
    pub modifiers: Modifiers,
    /// Span of the enclosing field declaration (may declare several variables).
    pub decl_span: Span,
    /// This variable alone as a standalone declaration, e.g. `private int a = 1;`.
    pub standalone_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassModel {
    pub qualified_name: String,
    pub simple_name: String,
    pub package: Option<String>,
    pub kind: ClassKind,
    pub modifiers: Modifiers,
    pub fields: Vec<FieldModel>,
    pub methods: Vec<MethodModel>,
    pub constructors: Vec<MethodModel>,
    /// `extends` clause: the superclass for classes, super-interfaces for interfaces.
    pub supertype_names: Vec<String>,
    /// `implements` clause.
    pub interface_names: Vec<String>,
    pub is_test: bool,
    pub unit_path: PathBuf,
    pub imports: Vec<String>,
    /// Member types declared inside this class; their bodies are folded into this model.
    pub nested_types: Vec<String>,
    pub type_usages: Vec<TypeUsage>,
    /// Location of [`Self::text`] inside the compilation unit.
    pub decl_span: Span,
    pub name_span: Span,
    pub body_span: Span,
    pub text: String,
}

impl ClassModel {
    pub fn field(&self, name: &str) -> Option<&FieldModel> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn callables(&self) -> impl Iterator<Item = &MethodModel> {
        self.constructors.iter().chain(self.methods.iter())
    }

    pub fn callable(&self, id: &CallableId) -> Option<&MethodModel> {
        self.callables().find(|m| &m.id() == id)
    }

    pub fn is_constructor(&self, id: &CallableId) -> bool {
        self.constructors.iter().any(|c| &c.id() == id)
    }

    /// Concrete class instantiable as `new C()`: no explicit constructors,
    /// or a non-private zero-argument one.
    pub fn zero_arg_constructible(&self) -> bool {
        self.kind == ClassKind::ConcreteClass
            && (self.constructors.is_empty()
                || self
                    .constructors
                    .iter()
                    .any(|c| c.parameters.is_empty() && c.modifiers.visibility != Visibility::Private))
    }

    pub fn method_names(&self) -> BTreeSet<&str> {
        self.methods.iter().map(|m| m.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilationUnit {
    /// Path relative to the project root.
    pub path: PathBuf,
    pub text: String,
    pub classes: Vec<ClassModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedUnit {
    pub path: PathBuf,
    pub diagnostic: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProject {
    pub id: String,
    pub root_path: PathBuf,
    pub units: Vec<CompilationUnit>,
    pub skipped: Vec<SkippedUnit>,
}

impl SourceProject {
    pub fn classes(&self) -> impl Iterator<Item = &ClassModel> {
        self.units.iter().flat_map(|u| u.classes.iter())
    }

    pub fn class(&self, qualified_name: &str) -> Option<&ClassModel> {
        self.classes().find(|c| c.qualified_name == qualified_name)
    }

    pub fn unit(&self, path: &Path) -> Option<&CompilationUnit> {
        self.units.iter().find(|u| u.path == path)
    }

    pub fn unit_of(&self, class: &ClassModel) -> Option<&CompilationUnit> {
        self.unit(&class.unit_path)
    }

    /// `skipped_units.txt` body: one `path<TAB>diagnostic` line per skipped unit.
    pub fn skipped_listing(&self) -> String {
        self.skipped.iter().map(|s| format!("{}\t{}\n", s.path.display(), s.diagnostic)).collect()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("project path not found: {0}")]
    PathNotFound(PathBuf),
    #[error("no parseable .java units under {path} ({skipped} skipped)")]
    ZeroParseableUnits { path: PathBuf, skipped: usize },
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Loads every `.java` file under `path`. Units that fail to parse (or that
/// redeclare an already-seen type) land in [`SourceProject::skipped`].
pub fn load_project(path: &Path) -> Result<SourceProject, CorpusError> {
    if !path.is_dir() {
        return Err(CorpusError::PathNotFound(path.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(path)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .filter(|e| e.path().extension().is_some_and(|x| x == "java"))
        .map(|e| e.path().strip_prefix(path).unwrap_or(e.path()).to_path_buf())
        .collect();
    files.sort();

    let loaded: Vec<(PathBuf, Result<String, std::io::Error>)> = files
        .into_iter()
        .map(|rel| {
            let text = std::fs::read_to_string(path.join(&rel));
            (rel, text)
        })
        .collect();

    let parsed: Vec<(PathBuf, String, Result<Vec<ClassModel>, SyntaxError>)> = loaded
        .into_par_iter()
        .map(|(rel, text)| match text {
            Ok(text) => {
                let classes = parse_unit(&rel, &text);
                (rel, text, classes)
            }
            Err(e) => {
                (rel, String::new(), Err(SyntaxError { line: 0, column: 0, snippet: format!("unreadable: {e}") }))
            }
        })
        .collect();

    let mut hasher = Sha256::new();
    let mut units = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = BTreeSet::new();
    for (rel, text, classes) in parsed {
        match classes {
            Ok(classes) => {
                if let Some(dup) = classes.iter().find(|c| seen.contains(&c.qualified_name)) {
                    skipped
                        .push(SkippedUnit { path: rel, diagnostic: format!("duplicate type {}", dup.qualified_name) });
                    continue;
                }
                seen.extend(classes.iter().map(|c| c.qualified_name.clone()));
                hasher.update(rel.to_string_lossy().as_bytes());
                hasher.update([0]);
                hasher.update(text.as_bytes());
                hasher.update([0]);
                units.push(CompilationUnit { path: rel, text, classes });
            }
            Err(e) => skipped.push(SkippedUnit { path: rel, diagnostic: e.to_string() }),
        }
    }
    if units.is_empty() {
        return Err(CorpusError::ZeroParseableUnits { path: path.to_path_buf(), skipped: skipped.len() });
    }
    let digest = hex::encode(hasher.finalize());
    let dir_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "project".to_string());
    Ok(SourceProject { id: format!("{}-{}", dir_name, &digest[..12]), root_path: path.to_path_buf(), units, skipped })
}

const TEST_ANNOTATIONS: &[&str] = &[
    "Test",
    "ParameterizedTest",
    "RepeatedTest",
    "TestFactory",
    "TestTemplate",
    "BeforeEach",
    "AfterEach",
    "BeforeAll",
    "AfterAll",
    "Before",
    "After",
    "BeforeClass",
    "AfterClass",
];

fn has_test_affix(name: &str) -> bool {
    if ["Test", "Tests", "TestCase"].iter().any(|s| name.ends_with(s)) {
        return true;
    }
    // `Test` prefix only when followed by another word: TestUtils, not Testament.
    name.strip_prefix("Test").and_then(|rest| rest.chars().next()).is_some_and(|c| c.is_ascii_uppercase() || c == '_')
}

/// Heuristic test-class detection by name affix, test annotation, or a
/// `test`/`tests` segment in the source path.
pub fn is_test_class(class: &ClassModel) -> bool {
    is_test_parts(&class.simple_name, &class.unit_path, class.callables())
}

pub(crate) fn is_test_parts<'a>(
    simple_name: &str,
    path: &Path,
    callables: impl IntoIterator<Item = &'a MethodModel>,
) -> bool {
    if has_test_affix(simple_name) {
        return true;
    }
    if path.components().any(|c| matches!(c.as_os_str().to_str(), Some("test") | Some("tests"))) {
        return true;
    }
    callables.into_iter().any(|m| m.modifiers.annotations.iter().any(|a| TEST_ANNOTATIONS.contains(&a.as_str())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, rel: &str, text: &str) {
        let p = dir.join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, text).unwrap();
    }

    #[test]
    fn loads_all_units() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a/A.java", "class A {}");
        write(dir.path(), "b/B.java", "class B {}");
        write(dir.path(), "C.java", "interface C {}");
        let p = load_project(dir.path()).unwrap();
        assert_eq!(p.units.len(), 3);
        assert!(p.skipped.is_empty());
        let paths: Vec<_> = p.units.iter().map(|u| u.path.clone()).collect();
        let mut sorted = paths.clone();
        sorted.sort();
        assert_eq!(paths, sorted);
    }

    #[test]
    fn malformed_unit_is_skipped_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        for n in ["A", "B", "C", "D"] {
            write(dir.path(), &format!("{n}.java"), &format!("class {n} {{ void m() {{}} }}"));
        }
        write(dir.path(), "Broken.java", "class Broken { void m( { }");
        let p = load_project(dir.path()).unwrap();
        assert_eq!(p.units.len(), 4);
        assert_eq!(p.skipped.len(), 1);
        assert_eq!(p.skipped[0].path, PathBuf::from("Broken.java"));
        assert!(p.skipped_listing().starts_with("Broken.java\tsyntax error"));
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_project(dir.path()), Err(CorpusError::ZeroParseableUnits { .. })));
        assert!(matches!(load_project(&dir.path().join("nope")), Err(CorpusError::PathNotFound(_))));
    }

    #[test]
    fn ids_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "A.java", "class A {}");
        let a = load_project(dir.path()).unwrap();
        let b = load_project(dir.path()).unwrap();
        assert_eq!(a.id, b.id);
        write(dir.path(), "A.java", "class A { }");
        assert_ne!(load_project(dir.path()).unwrap().id, a.id);
    }

    fn class(src: &str, path: &str) -> ClassModel {
        parse_unit(Path::new(path), src).unwrap().remove(0)
    }

    #[test]
    fn test_class_rules() {
        assert!(is_test_class(&class("class FooTest {}", "src/main/java/FooTest.java")));
        assert!(is_test_class(&class("class TestUtils {}", "src/main/java/TestUtils.java")));
        assert!(!is_test_class(&class("class Testament {}", "src/main/java/Testament.java")));
        assert!(is_test_class(&class("class Helper {}", "src/test/java/Helper.java")));
        assert!(is_test_class(&class("class Checks { @Test void ok() {} }", "src/main/java/Checks.java")));
        assert!(!is_test_class(&class("class OrderService { void place() {} }", "src/main/java/OrderService.java")));
    }
}
